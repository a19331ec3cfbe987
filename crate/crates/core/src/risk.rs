//! Exact and Monte Carlo risks, oracle-inequality constants, and the
//! verification harness.
//!
//! Under the Brownian plus compound Poisson noise the coefficient noise has
//! `E xi_{j,n}^2 = sigma*` exactly, so the risk of a fixed weight sequence is
//!
//! ```text
//! R(S_gamma, S) = sum_j (1 - gamma(j))^2 theta_j^2 + sigma* |gamma|^2 / n.
//! ```
//!
//! The oracle inequality bounds the risk of the selected estimate by
//! `factor(rho) * min_gamma R(S_gamma, S) + additive / n`, with
//! `factor(rho) = (1 + 3 rho - 2 rho^2) / (1 - 3 rho)`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{empirical_error, estimate_from_parts};
use crate::io::fmt_real;
use crate::noise::{simulate_coefficient_noise, NoiseParams};
use crate::rng::ReplicateStreams;
use crate::selection::{select, sigma_hat, SelectionConfig, SigmaMode};
use crate::signal::{SignalSpec, DEFAULT_QUAD_POINTS};
use crate::stats::{mean_se, MeanSe};
use crate::weights::{Alpha, WeightGrid, WeightSequence};
use crate::Scalar;

/// Coefficients past this index are treated as tail mass.
pub const DEFAULT_J_TAIL: usize = 512;

pub const MIN_REPLICATES: usize = 100;

/// `R(S_gamma, S)` with `theta` truncated at `theta.len()`.
pub fn analytic_risk<T: Scalar>(gamma: &WeightSequence<T>, theta: &[T], sigma_star: T, n: usize) -> Result<T> {
    if gamma.support_end() > theta.len() {
        return Err(Error::InsufficientCoefficients { have: theta.len(), need: gamma.support_end() });
    }
    let bias = theta.iter().enumerate().fold(T::zero(), |acc, (j, &th)| {
        let d = T::one() - gamma.get(j + 1);
        acc + d * d * th * th
    });
    Ok(bias + sigma_star * gamma.sq_norm() / T::of_usize(n))
}

/// Upper bound on `sup_n c2*(n)`: `4 sigma* (sigma* + rho2^2 E Y^4)`.
pub fn c2_star_bound<T: Scalar>(noise: &NoiseParams<T>) -> T {
    let s = noise.sigma_star();
    let r2 = noise.rho2();
    T::of(4.0) * s * (s + r2 * r2 * T::of(noise.jump_law().m4()))
}

fn check_rho<T: Scalar>(rho: T) -> Result<()> {
    if !(rho > T::zero() && rho * T::of(3.0) < T::one()) {
        return Err(Error::Config(format!("rho must lie in (0, 1/3), got {rho}")));
    }
    Ok(())
}

/// `(1 + 3 rho - 2 rho^2) / (1 - 3 rho)`.
pub fn oracle_factor<T: Scalar>(rho: T) -> Result<T> {
    check_rho(rho)?;
    let three = T::of(3.0);
    Ok((T::one() + three * rho - T::of(2.0) * rho * rho) / (T::one() - three * rho))
}

/// `Psi_n(rho) = (2 sigma sigma* nu + 4 sigma c1 + 2 nu c2) / (sigma rho (1 - 3 rho))`.
pub fn psi_n<T: Scalar>(rho: T, sigma: T, sigma_star: T, c1: T, c2: T, nu: usize) -> Result<T> {
    check_rho(rho)?;
    if !(sigma > T::zero()) {
        return Err(Error::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
    }
    let two = T::of(2.0);
    let nu = T::of_usize(nu);
    let num = two * sigma * sigma_star * nu + T::of(4.0) * sigma * c1 + two * nu * c2;
    Ok(num / (sigma * rho * (T::one() - T::of(3.0) * rho)))
}

/// `kappa_n(S) = 4 |S'|_1^2 + sigma + sqrt(c2) + 4 |S'|_1 sqrt(sigma*) / n^(1/4) + c1 / n^(1/2)`.
pub fn kappa_n<T: Scalar>(sdot_l1: T, sigma: T, sigma_star: T, c1: T, c2: T, n: usize) -> T {
    let nt = T::of_usize(n);
    let four = T::of(4.0);
    four * sdot_l1 * sdot_l1
        + sigma
        + c2.sqrt()
        + four * sdot_l1 * sigma_star.sqrt() / nt.powf(T::of(0.25))
        + c1 / nt.sqrt()
}

/// [`kappa_n`] with `|S'|_1` computed from the signal.
pub fn kappa_n_for_signal<T: Scalar>(
    signal: &SignalSpec<T>,
    sigma: T,
    sigma_star: T,
    c1: T,
    c2: T,
    n: usize,
) -> Result<T> {
    let sdot = signal.sdot_l1(DEFAULT_QUAD_POINTS)?;
    Ok(kappa_n(sdot, sigma, sigma_star, c1, c2, n))
}

/// `B*_n(rho) = Psi_n(rho) + 6 mu E|sigma_hat - sigma| / (1 - 3 rho)`.
pub fn b_star_n<T: Scalar>(rho: T, psi: T, mu: usize, sigma_abs_err: T) -> Result<T> {
    check_rho(rho)?;
    Ok(psi + T::of(6.0) * T::of_usize(mu) * sigma_abs_err / (T::one() - T::of(3.0) * rho))
}

/// `D_n(rho) = 2 Psi_n(rho) + 2 rho (1 - rho) mu kappa_n / ((1 - 3 rho) sqrt n)`.
pub fn d_n<T: Scalar>(rho: T, psi: T, mu: usize, kappa: T, n: usize) -> Result<T> {
    check_rho(rho)?;
    let two = T::of(2.0);
    Ok(two * psi
        + two * rho * (T::one() - rho) * T::of_usize(mu) * kappa
            / ((T::one() - T::of(3.0) * rho) * T::of_usize(n).sqrt()))
}

/// Which additive term closes the inequality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundChoice {
    /// `Psi_n` when sigma is known; `B*_n` with `E|sigma_hat - sigma|`
    /// replaced by `kappa_n / sqrt n` when it is estimated.
    Standard,
    /// `D_n`, which already folds in the sigma estimation error.
    DTerm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleBound<T> {
    pub factor: T,
    pub additive: T,
    pub rhs: T,
}

/// `factor * oracle_risk + additive / n`.
pub fn oracle_bound<T: Scalar>(rho: T, n: usize, oracle_risk: T, additive: T) -> Result<OracleBound<T>> {
    let factor = oracle_factor(rho)?;
    Ok(OracleBound { factor, additive, rhs: factor * oracle_risk + additive / T::of_usize(n) })
}

/// Additive terms for a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OracleConstants<T> {
    pub sigma: T,
    pub sigma_star: T,
    pub c1_star: T,
    pub c2_star_bound: T,
    pub psi: T,
    pub b_star: T,
    pub kappa: Option<T>,
    pub d_n: Option<T>,
    pub mu: usize,
    pub nu: usize,
}

impl<T: Scalar> OracleConstants<T> {
    /// Instantiates the constants with `sigma = sigma*`, `c1* = 0` and `c2*`
    /// replaced by its uniform bound. `sdot_l1` is needed for `kappa_n`.
    pub fn compute(
        noise: &NoiseParams<T>,
        n: usize,
        rho: T,
        mode: SigmaMode<T>,
        mu: usize,
        nu: usize,
        sdot_l1: Option<T>,
    ) -> Result<Self> {
        let sigma_star = noise.sigma_star();
        let sigma = sigma_star;
        let c1 = T::zero();
        let c2 = c2_star_bound(noise);
        let psi = psi_n(rho, sigma, sigma_star, c1, c2, nu)?;
        let kappa = sdot_l1.map(|s| kappa_n(s, sigma, sigma_star, c1, c2, n));
        let d = kappa.map(|k| d_n(rho, psi, mu, k, n)).transpose()?;
        let b_star = match mode {
            SigmaMode::Known(_) => psi,
            SigmaMode::Estimated => {
                let k = kappa
                    .ok_or_else(|| Error::Capability("estimated sigma needs |S'|_1 for the kappa_n bound".into()))?;
                b_star_n(rho, psi, mu, k / T::of_usize(n).sqrt())?
            }
        };
        Ok(Self { sigma, sigma_star, c1_star: c1, c2_star_bound: c2, psi, b_star, kappa, d_n: d, mu, nu })
    }

    pub fn additive(&self, choice: BoundChoice) -> Result<T> {
        match choice {
            BoundChoice::Standard => Ok(self.b_star),
            BoundChoice::DTerm => self.d_n.ok_or_else(|| Error::Capability("D_n needs |S'|_1".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlphaCount<T> {
    pub alpha: Option<Alpha<T>>,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct McRisk<T> {
    pub mean: T,
    pub se: T,
    pub replicates: usize,
    /// Chosen-alpha histogram in `(beta, t)` order.
    pub histogram: Vec<AlphaCount<T>>,
}

/// Outcome of one simulated dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateOutcome<T> {
    pub loss: T,
    pub chosen_index: usize,
    pub sigma_used: T,
}

/// Signal, noise, horizon, candidate family and selection rule, with the
/// true coefficients precomputed up to the tail index.
pub struct Experiment<'a, T: Scalar> {
    signal: &'a SignalSpec<T>,
    noise: &'a NoiseParams<T>,
    n: usize,
    grid: &'a WeightGrid<T>,
    cfg: &'a SelectionConfig<T>,
    theta: Vec<T>,
    j_sim: usize,
}

impl<'a, T: Scalar> Experiment<'a, T> {
    pub fn new(
        signal: &'a SignalSpec<T>,
        noise: &'a NoiseParams<T>,
        n: usize,
        grid: &'a WeightGrid<T>,
        cfg: &'a SelectionConfig<T>,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Config("weight grid is empty".into()));
        }
        if grid.max_support() > n {
            return Err(Error::Budget { requested: grid.max_support(), available: n });
        }
        // sigma_hat reads every coefficient up to n; the known-sigma rule only
        // ever touches the grid support
        let j_sim = match cfg.sigma_mode() {
            SigmaMode::Estimated => {
                if n < 4 {
                    return Err(Error::HorizonTooSmall { n, min: 4 });
                }
                n
            }
            SigmaMode::Known(_) => grid.max_support(),
        };
        let j_tail = j_sim.max(DEFAULT_J_TAIL);
        let theta = signal.fourier_coefficients(j_tail, DEFAULT_QUAD_POINTS);
        Ok(Self { signal, noise, n, grid, cfg, theta, j_sim })
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn j_tail(&self) -> usize {
        self.theta.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Exact risk of every grid member, in grid order.
    pub fn per_gamma_risk(&self) -> Result<Vec<T>> {
        let s = self.noise.sigma_star();
        self.grid.members().iter().map(|g| analytic_risk(g, &self.theta, s, self.n)).collect()
    }

    /// Simulates replicate `r` under `seed` and runs the selection rule.
    pub fn replicate(&self, seed: u64, r: u64) -> Result<ReplicateOutcome<T>> {
        let mut streams = ReplicateStreams::new(seed, r);
        let xi = simulate_coefficient_noise(self.noise, self.n, self.j_sim, &mut streams)?;
        let est = estimate_from_parts(&self.theta[..self.j_sim], &xi.values, self.n)?;
        let sel = select(&est, self.grid, self.cfg)?;
        let loss = empirical_error(&sel.chosen, &est, &self.theta)?;
        Ok(ReplicateOutcome { loss, chosen_index: sel.chosen_index, sigma_used: sel.sigma_used })
    }

    /// Runs the selection on the true coefficients (no noise) and returns
    /// the loss and chosen index. Estimated sigma then reads the tail energy.
    pub fn noiseless(&self) -> Result<ReplicateOutcome<T>> {
        let zeros = vec![T::zero(); self.j_sim];
        let est = estimate_from_parts(&self.theta[..self.j_sim], &zeros, self.n)?;
        let sel = select(&est, self.grid, self.cfg)?;
        let loss = empirical_error(&sel.chosen, &est, &self.theta)?;
        Ok(ReplicateOutcome { loss, chosen_index: sel.chosen_index, sigma_used: sel.sigma_used })
    }

    /// Monte Carlo MISE of the selected estimate.
    pub fn mise_monte_carlo(&self, replicates: usize, seed: u64) -> Result<McRisk<T>> {
        if replicates < MIN_REPLICATES {
            return Err(Error::InvalidArgument(format!("need at least {MIN_REPLICATES} replicates, got {replicates}")));
        }
        let outcomes: Vec<ReplicateOutcome<T>> =
            (0..replicates as u64).into_par_iter().map(|r| self.replicate(seed, r)).collect::<Result<_>>()?;
        let losses: Vec<T> = outcomes.iter().map(|o| o.loss).collect();
        let MeanSe { mean, se } = mean_se(&losses);
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for o in &outcomes {
            *counts.entry(o.chosen_index).or_default() += 1;
        }
        let mut histogram: Vec<AlphaCount<T>> = counts
            .into_iter()
            .map(|(i, count)| AlphaCount { alpha: self.grid.members()[i].label().copied(), count })
            .collect();
        histogram.sort_by(|a, b| match (&a.alpha, &b.alpha) {
            (Some(x), Some(y)) => x.lex_cmp(y),
            _ => std::cmp::Ordering::Equal,
        });
        Ok(McRisk { mean, se, replicates, histogram })
    }

    /// Assembles the constants, runs the Monte Carlo and checks
    /// `selected_risk - 2 SE <= factor * oracle_risk + additive / n`.
    pub fn verify_oracle(&self, replicates: usize, seed: u64, choice: BoundChoice) -> Result<OracleReport<T>> {
        let risks = self.per_gamma_risk()?;
        let oracle_risk = risks.iter().copied().fold(T::infinity(), T::min);
        let sdot = if self.signal.has_derivative() { Some(self.signal.sdot_l1(DEFAULT_QUAD_POINTS)?) } else { None };
        let constants = OracleConstants::compute(
            self.noise,
            self.n,
            self.cfg.rho(),
            self.cfg.sigma_mode(),
            self.grid.mu(),
            self.grid.nu(),
            sdot,
        )?;
        let additive = constants.additive(choice)?;
        let bound = oracle_bound(self.cfg.rho(), self.n, oracle_risk, additive)?;
        let mc = self.mise_monte_carlo(replicates, seed)?;
        let j_tail = self.j_tail();
        let truncation_remainder = match self.signal.coefficients() {
            Some(c) if c.len() <= j_tail => T::zero(),
            _ => sdot.map_or(T::infinity(), |s| T::of(4.0) * s * s / T::of_usize(j_tail)),
        };
        let holds = mc.mean - T::of(2.0) * mc.se <= bound.rhs;
        let per_gamma_risk = self
            .grid
            .members()
            .iter()
            .zip(risks)
            .map(|(g, risk)| GammaRisk { alpha: g.label().copied(), risk })
            .collect();
        Ok(OracleReport {
            signal: self.signal.name().to_string(),
            n: self.n,
            rho: self.cfg.rho(),
            sigma_mode: self.cfg.sigma_mode().name(),
            bound_choice: choice,
            per_gamma_risk,
            oracle_risk,
            selected_risk_mc: mc.mean,
            se: mc.se,
            replicates: mc.replicates,
            histogram: mc.histogram,
            constants,
            factor: bound.factor,
            additive: bound.additive,
            rhs: bound.rhs,
            j_tail,
            truncation_remainder,
            holds,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GammaRisk<T> {
    pub alpha: Option<Alpha<T>>,
    pub risk: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleReport<T> {
    pub signal: String,
    pub n: usize,
    pub rho: T,
    pub sigma_mode: &'static str,
    pub bound_choice: BoundChoice,
    pub per_gamma_risk: Vec<GammaRisk<T>>,
    pub oracle_risk: T,
    pub selected_risk_mc: T,
    pub se: T,
    pub replicates: usize,
    pub histogram: Vec<AlphaCount<T>>,
    pub constants: OracleConstants<T>,
    pub factor: T,
    pub additive: T,
    pub rhs: T,
    pub j_tail: usize,
    /// Bound on the coefficient energy past `j_tail`, `4 |S'|_1^2 / j_tail`.
    pub truncation_remainder: T,
    pub holds: bool,
}

pub const REPORT_CSV_HEADER: &str = "n,rho,sigma_mode,oracle_risk,selected_risk,se,factor,additive,rhs,holds";

impl<T: Scalar> OracleReport<T> {
    pub fn write_csv_row<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            self.n,
            fmt_real(self.rho),
            self.sigma_mode,
            fmt_real(self.oracle_risk),
            fmt_real(self.selected_risk_mc),
            fmt_real(self.se),
            fmt_real(self.factor),
            fmt_real(self.additive),
            fmt_real(self.rhs),
            self.holds
        )?;
        Ok(())
    }
}

/// Free-function form of [`Experiment::mise_monte_carlo`].
pub fn mise_monte_carlo<T: Scalar>(
    signal: &SignalSpec<T>,
    noise: &NoiseParams<T>,
    grid: &WeightGrid<T>,
    cfg: &SelectionConfig<T>,
    replicates: usize,
    seed: u64,
) -> Result<McRisk<T>> {
    Experiment::new(signal, noise, grid.n(), grid, cfg)?.mise_monte_carlo(replicates, seed)
}

/// Free-function form of [`Experiment::verify_oracle`] with the standard bound.
pub fn verify_oracle<T: Scalar>(
    signal: &SignalSpec<T>,
    noise: &NoiseParams<T>,
    grid: &WeightGrid<T>,
    cfg: &SelectionConfig<T>,
    replicates: usize,
    seed: u64,
) -> Result<OracleReport<T>> {
    Experiment::new(signal, noise, grid.n(), grid, cfg)?.verify_oracle(replicates, seed, BoundChoice::Standard)
}

/// Monte Carlo estimate of `E |sigma_hat_n - sigma*|`.
pub fn sigma_hat_error_mc<T: Scalar>(
    signal: &SignalSpec<T>,
    noise: &NoiseParams<T>,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<MeanSe<T>> {
    if n < 4 {
        return Err(Error::HorizonTooSmall { n, min: 4 });
    }
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let theta = signal.fourier_coefficients(n, DEFAULT_QUAD_POINTS);
    let s = noise.sigma_star();
    let errs: Vec<T> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut streams = ReplicateStreams::new(seed, r);
            let xi = simulate_coefficient_noise(noise, n, n, &mut streams)?;
            let est = estimate_from_parts(&theta, &xi.values, n)?;
            Ok((sigma_hat(&est)? - s).abs())
        })
        .collect::<Result<_>>()?;
    Ok(mean_se(&errs))
}

/// One point of an additive-term sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint<T> {
    pub n: usize,
    pub nu: usize,
    pub mu: usize,
    pub d_n: T,
    /// `D_n / n^delta`.
    pub scaled: T,
}

/// `D_n(rho) / n^delta` over horizons, each with its own grid
/// (`k_star` and `epsilon` default to their `n`-dependent values).
pub fn d_n_sweep<T: Scalar>(
    noise: &NoiseParams<T>,
    sdot_l1: T,
    rho: T,
    delta: T,
    ns: &[usize],
    k_star: Option<u32>,
    epsilon: Option<f64>,
) -> Result<Vec<SweepPoint<T>>> {
    ns.iter()
        .map(|&n| {
            let grid = WeightGrid::<T>::build(n, k_star, epsilon)?;
            let c = OracleConstants::compute(noise, n, rho, SigmaMode::Estimated, grid.mu(), grid.nu(), Some(sdot_l1))?;
            let d = c.d_n.expect("sdot supplied");
            Ok(SweepPoint { n, nu: grid.nu(), mu: grid.mu(), d_n: d, scaled: d / T::of_usize(n).powf(delta) })
        })
        .collect()
}
