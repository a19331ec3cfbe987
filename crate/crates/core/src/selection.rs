//! Penalized model selection over a weight family.
//!
//! For each candidate `gamma` the cost is
//!
//! ```text
//! J_n(gamma) = sum gamma(j)^2 theta_hat_j^2 - 2 sum gamma(j) theta_tilde_j + rho sigma |gamma|^2 / n
//! theta_tilde_j = theta_hat_j^2 - sigma / n
//! ```
//!
//! where `sigma` is either known or estimated by
//! `sigma_hat = sum_{j = [sqrt n] + 1}^{n} theta_hat_j^2`. The selected
//! estimate is the weighted estimate at the cost minimiser.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{weighted_estimate, CoefficientEstimates};
use crate::signal::SignalSpec;
use crate::weights::{Alpha, WeightGrid, WeightSequence};
use crate::Scalar;

pub const DEFAULT_RHO: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SigmaMode<T> {
    Known(T),
    Estimated,
}

impl<T> SigmaMode<T> {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaMode::Known(_) => "known",
            SigmaMode::Estimated => "estimated",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectionConfig<T> {
    rho: T,
    sigma_mode: SigmaMode<T>,
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    // the oracle inequality needs 0 < rho < 1/3; its factor diverges at 1/3
    if !(rho > T::zero() && rho * T::of(3.0) < T::one()) {
        return Err(Error::Config(format!("penalty factor rho must lie in (0, 1/3), got {rho}")));
    }
    Ok(())
}

impl<T: Scalar> SelectionConfig<T> {
    pub fn new(rho: T, sigma_mode: SigmaMode<T>) -> Result<Self> {
        check_rho(rho)?;
        if let SigmaMode::Known(s) = sigma_mode {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::Config(format!("known sigma must be finite and > 0, got {s}")));
            }
        }
        Ok(Self { rho, sigma_mode })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn sigma_mode(&self) -> SigmaMode<T> {
        self.sigma_mode
    }
}

/// First index of the `sigma_hat` sum, `[sqrt n] + 1`.
pub fn sigma_hat_start(n: usize) -> usize {
    n.isqrt() + 1
}

/// `sigma_hat_n = sum_{j=l}^{n} theta_hat_j^2`, `l = [sqrt n] + 1`.
pub fn sigma_hat<T: Scalar>(est: &CoefficientEstimates<T>) -> Result<T> {
    let n = est.n();
    if n < 4 {
        return Err(Error::HorizonTooSmall { n, min: 4 });
    }
    if est.j_max() < n {
        return Err(Error::InsufficientCoefficients { have: est.j_max(), need: n });
    }
    let l = sigma_hat_start(n);
    Ok(est.values()[l - 1..n].iter().fold(T::zero(), |a, &x| a + x * x))
}

/// `theta_tilde_j = theta_hat_j^2 - sigma / n`.
pub fn theta_tilde<T: Scalar>(est: &CoefficientEstimates<T>, sigma: T) -> Result<Vec<T>> {
    if !(sigma >= T::zero()) {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    let shift = sigma / T::of_usize(est.n());
    Ok(est.values().iter().map(|&x| x * x - shift).collect())
}

/// `P_n(gamma) = sigma |gamma|^2 / n`.
pub fn penalty<T: Scalar>(gamma: &WeightSequence<T>, n: usize, sigma: T) -> T {
    sigma * gamma.sq_norm() / T::of_usize(n)
}

/// `J_n(gamma)`.
pub fn cost<T: Scalar>(
    gamma: &WeightSequence<T>,
    est: &CoefficientEstimates<T>,
    cfg: &SelectionConfig<T>,
    sigma: T,
) -> Result<T> {
    check_rho(cfg.rho)?;
    if gamma.support_end() > est.j_max() {
        return Err(Error::Budget { requested: gamma.support_end(), available: est.j_max() });
    }
    if !(sigma >= T::zero()) {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(cost_unchecked(gamma, est.values(), est.n(), cfg.rho, sigma))
}

fn cost_unchecked<T: Scalar>(gamma: &WeightSequence<T>, theta_hat: &[T], n: usize, rho: T, sigma: T) -> T {
    let shift = sigma / T::of_usize(n);
    let two = T::of(2.0);
    let fit = gamma.values().iter().zip(theta_hat).fold(T::zero(), |acc, (&g, &x)| {
        let x2 = x * x;
        acc + g * g * x2 - two * g * (x2 - shift)
    });
    fit + rho * penalty(gamma, n, sigma)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostEntry<T> {
    pub alpha: Option<Alpha<T>>,
    pub cost: T,
}

/// Index of the minimal cost; ties go to the lexicographically smallest
/// `(beta, t)` label, then to the earliest entry.
pub fn argmin_cost<T: Scalar>(table: &[CostEntry<T>]) -> Option<usize> {
    let label_cmp = |a: &Option<Alpha<T>>, b: &Option<Alpha<T>>| match (a, b) {
        (Some(x), Some(y)) => x.lex_cmp(y),
        _ => Ordering::Equal,
    };
    let mut best: Option<usize> = None;
    for (i, e) in table.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &table[b];
                if e.cost < cur.cost || (e.cost == cur.cost && label_cmp(&e.alpha, &cur.alpha) == Ordering::Less) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct SelectionResult<T> {
    pub chosen_index: usize,
    pub chosen: WeightSequence<T>,
    pub cost_table: Vec<CostEntry<T>>,
    /// The `sigma` fed into both `theta_tilde` and the penalty.
    pub sigma_used: T,
    #[serde(skip)]
    pub estimate: SignalSpec<T>,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn chosen_alpha(&self) -> Option<&Alpha<T>> {
        self.chosen.label()
    }

    pub fn chosen_cost(&self) -> T {
        self.cost_table[self.chosen_index].cost
    }

    /// Coefficients of the selected estimate.
    pub fn estimate_coefficients(&self) -> &[T] {
        self.estimate.coefficients().unwrap_or(&[])
    }
}

/// `sigma` used for a dataset under `mode`.
pub fn sigma_for<T: Scalar>(est: &CoefficientEstimates<T>, mode: SigmaMode<T>) -> Result<T> {
    match mode {
        SigmaMode::Known(s) => Ok(s),
        SigmaMode::Estimated => sigma_hat(est),
    }
}

/// Minimises `J_n` over the grid and returns the selected estimate.
pub fn select<T: Scalar>(
    est: &CoefficientEstimates<T>,
    grid: &WeightGrid<T>,
    cfg: &SelectionConfig<T>,
) -> Result<SelectionResult<T>> {
    if grid.is_empty() {
        return Err(Error::Config("weight grid is empty".into()));
    }
    check_rho(cfg.rho)?;
    let needed = grid.max_support();
    if needed > est.j_max() {
        return Err(Error::Budget { requested: needed, available: est.j_max() });
    }
    let sigma = sigma_for(est, cfg.sigma_mode)?;
    let cost_table: Vec<CostEntry<T>> = grid
        .members()
        .iter()
        .map(|g| CostEntry {
            alpha: g.label().copied(),
            cost: cost_unchecked(g, est.values(), est.n(), cfg.rho, sigma),
        })
        .collect();
    let chosen_index = argmin_cost(&cost_table).expect("grid is nonempty");
    let chosen = grid.members()[chosen_index].clone();
    let estimate = weighted_estimate(&chosen, est)?;
    Ok(SelectionResult { chosen_index, chosen, cost_table, sigma_used: sigma, estimate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn est(values: Vec<f64>, n: usize) -> CoefficientEstimates<f64> {
        CoefficientEstimates::new(values, n).unwrap()
    }

    #[test]
    fn rho_validation() {
        assert!(SelectionConfig::new(0.1f64, SigmaMode::Estimated).is_ok());
        assert!(SelectionConfig::new(0.0f64, SigmaMode::Estimated).is_err());
        assert!(SelectionConfig::new(1.0f64 / 3.0, SigmaMode::Estimated).is_err());
        assert!(SelectionConfig::new(0.4f64, SigmaMode::Estimated).is_err());
        assert!(SelectionConfig::new(0.1f64, SigmaMode::Known(0.0)).is_err());
    }

    #[test]
    fn sigma_hat_examples() {
        assert_eq!(sigma_hat(&est(vec![0.0; 100], 100)).unwrap(), 0.0);
        // l = 11, 90 terms of 1/100
        let e = est(vec![0.1; 100], 100);
        assert!((sigma_hat(&e).unwrap() - 0.9).abs() < 1e-12);
        assert!(matches!(sigma_hat(&est(vec![0.0; 3], 3)), Err(Error::HorizonTooSmall { .. })));
        assert!(matches!(sigma_hat(&est(vec![0.0; 50], 100)), Err(Error::InsufficientCoefficients { .. })));
    }

    #[test]
    fn theta_tilde_examples() {
        let e = est(vec![0.5, 0.0, -0.2], 100);
        assert_eq!(theta_tilde(&e, 0.0).unwrap(), vec![0.25, 0.0, 0.04000000000000001]);
        let t = theta_tilde(&e, 1.0).unwrap();
        assert!((t[0] - 0.24).abs() < 1e-15);
        assert_eq!(t[1], -0.01);
    }

    #[test]
    fn penalty_examples() {
        let zero = WeightSequence::new(vec![0.0f64; 4], None).unwrap();
        assert_eq!(penalty(&zero, 100, 1.0), 0.0);
        let g = WeightSequence::new(vec![1.0f64, 1.0, 0.5], None).unwrap();
        assert!((penalty(&g, 100, 1.0) - 0.0225).abs() < 1e-15);
        assert_eq!(penalty(&g, 100, 2.0), 2.0 * penalty(&g, 100, 1.0));
    }

    #[test]
    fn cost_examples() {
        let cfg = SelectionConfig::new(0.1, SigmaMode::Estimated).unwrap();
        let e = est(vec![0.7, -0.3], 50);
        let zero = WeightSequence::new(vec![0.0f64, 0.0], None).unwrap();
        assert_eq!(cost(&zero, &e, &cfg, 1.5).unwrap(), 0.0);
        // single-entry gamma = (1): J = -a^2 + (2 + rho) s / n
        let one = WeightSequence::projection(1);
        let (a, s, n) = (0.7f64, 1.5f64, 50.0f64);
        let expect = -a * a + (2.0 + 0.1) * s / n;
        assert!((cost(&one, &e, &cfg, s).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn large_coefficient_prefers_weight_one() {
        let cfg = SelectionConfig::new(0.1, SigmaMode::Known(1.0)).unwrap();
        let e = est(vec![0.0, 2.0], 100);
        let off = WeightSequence::new(vec![0.0, 0.0], None).unwrap();
        let on = WeightSequence::new(vec![0.0, 1.0], None).unwrap();
        assert!(cost(&on, &e, &cfg, 1.0).unwrap() < cost(&off, &e, &cfg, 1.0).unwrap());
    }

    #[test]
    fn single_member_grid() {
        let g = WeightSequence::new(vec![1.0, 0.5], Some(Alpha { beta: 2, t_index: 3, t: 0.3 })).unwrap();
        let grid = WeightGrid::from_members(10, vec![g.clone()]).unwrap();
        let cfg = SelectionConfig::new(0.1, SigmaMode::Known(1.0)).unwrap();
        let r = select(&est(vec![0.1; 10], 10), &grid, &cfg).unwrap();
        assert_eq!(r.chosen, g);
        assert_eq!(r.estimate_coefficients(), &[0.1, 0.05]);
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let mk =
            |beta, i| WeightSequence::new(vec![1.0, 0.5], Some(Alpha { beta, t_index: i, t: 0.1 * i as f64 })).unwrap();
        let grid = WeightGrid::from_members(10, vec![mk(2, 1), mk(1, 4), mk(1, 2)]).unwrap();
        let cfg = SelectionConfig::new(0.1, SigmaMode::Known(1.0)).unwrap();
        let r = select(&est(vec![0.3; 10], 10), &grid, &cfg).unwrap();
        assert_eq!(r.chosen_index, 2);
        assert_eq!(r.chosen_alpha().unwrap().key(), (1, 2));
    }

    #[test]
    fn empty_grid_and_budget_errors() {
        let grid = WeightGrid::<f64>::from_members(10, vec![]).unwrap();
        let cfg = SelectionConfig::new(0.1, SigmaMode::Known(1.0)).unwrap();
        assert!(matches!(select(&est(vec![0.0; 3], 10), &grid, &cfg), Err(Error::Config(_))));
        let grid = WeightGrid::from_members(10, vec![WeightSequence::projection(5)]).unwrap();
        assert!(matches!(select(&est(vec![0.0; 3], 10), &grid, &cfg), Err(Error::Budget { .. })));
    }

    #[test]
    fn known_sigma_feeds_theta_tilde_and_penalty() {
        let grid = WeightGrid::<f64>::build(200, None, None).unwrap();
        let cfg = SelectionConfig::new(0.2, SigmaMode::Known(0.7)).unwrap();
        let e = est((0..grid.max_support()).map(|j| 1.0 / (1.0 + j as f64)).collect(), 200);
        let r = select(&e, &grid, &cfg).unwrap();
        assert_eq!(r.sigma_used, 0.7);
        for (g, entry) in grid.members().iter().zip(&r.cost_table) {
            let direct = cost(g, &e, &cfg, 0.7).unwrap();
            assert_eq!(direct, entry.cost);
        }
        let best = r.chosen_cost();
        assert!(r.cost_table.iter().all(|e| best <= e.cost));
    }

    proptest! {
        // shifting every cost by a constant keeps the minimiser
        #[test]
        fn argmin_shift_invariant(costs in prop::collection::vec(-1000i32..1000, 1..40), shift in -1000i32..1000) {
            let table: Vec<CostEntry<f64>> = costs.iter().enumerate().map(|(i, &c)| CostEntry {
                alpha: Some(Alpha { beta: 1 + (i % 3) as u32, t_index: 1 + i as u32, t: 0.1 * (1 + i) as f64 }),
                cost: c as f64 / 8.0,
            }).collect();
            let shifted: Vec<CostEntry<f64>> = table.iter().map(|e| CostEntry { alpha: e.alpha, cost: e.cost + shift as f64 }).collect();
            prop_assert_eq!(argmin_cost(&table), argmin_cost(&shifted));
        }
    }
}
