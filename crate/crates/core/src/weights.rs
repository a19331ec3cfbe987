//! Pinsker-type weight sequences and the grid of candidates the selection
//! procedure searches.
//!
//! For `alpha = (beta, t)`:
//!
//! ```text
//! gamma_alpha(j) = 1                        for 1 <= j <= j0
//!                = 1 - (j / omega)^beta     for j0 < j <= omega
//!                = 0                        otherwise
//! omega = (tau_beta t n)^(1 / (2 beta + 1)),  j0 = [omega / ln n]
//! tau_beta = (beta + 1)(2 beta + 1) / (pi^(2 beta) beta)
//! ```

use std::cmp::Ordering;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::Scalar;

/// Grid label `alpha = (beta, t)` with `t = t_index * epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Alpha<T> {
    pub beta: u32,
    pub t_index: u32,
    pub t: T,
}

impl<T: Scalar> Alpha<T> {
    /// Lexicographic `(beta, t)` order.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.beta
            .cmp(&other.beta)
            .then(self.t.partial_cmp(&other.t).unwrap_or(Ordering::Equal))
            .then(self.t_index.cmp(&other.t_index))
    }

    pub fn key(&self) -> (u32, u32) {
        (self.beta, self.t_index)
    }
}

/// Weights `gamma(1..=support_end)` in `[0, 1]`; zero beyond.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightSequence<T> {
    values: Vec<T>,
    label: Option<Alpha<T>>,
}

impl<T: Scalar> WeightSequence<T> {
    pub fn new(values: Vec<T>, label: Option<Alpha<T>>) -> Result<Self> {
        if let Some(j) = values.iter().position(|&g| !(g >= T::zero() && g <= T::one())) {
            return Err(Error::InvalidArgument(format!("weight gamma({}) = {} outside [0, 1]", j + 1, values[j])));
        }
        Ok(Self { values, label })
    }

    /// `gamma(j) = 1` for `j <= k`, zero afterwards.
    pub fn projection(k: usize) -> Self {
        Self { values: vec![T::one(); k], label: None }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn label(&self) -> Option<&Alpha<T>> {
        self.label.as_ref()
    }

    pub fn support_end(&self) -> usize {
        self.values.len()
    }

    /// `gamma(j)` for 1-based `j`.
    pub fn get(&self, j: usize) -> T {
        if j == 0 {
            return T::zero();
        }
        self.values.get(j - 1).copied().unwrap_or_else(T::zero)
    }

    /// `#(gamma)`, the number of nonzero weights.
    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&g| g > T::zero()).count()
    }

    /// `|gamma|^2`.
    pub fn sq_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &g| a + g * g)
    }

    /// `L(gamma) = sum_j gamma(j)`.
    pub fn l_sum(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &g| a + g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightSummary<T> {
    pub count: usize,
    pub sq_norm: T,
    pub l_sum: T,
}

pub fn weight_summaries<T: Scalar>(g: &WeightSequence<T>) -> WeightSummary<T> {
    WeightSummary { count: g.count(), sq_norm: g.sq_norm(), l_sum: g.l_sum() }
}

pub fn tau_beta<T: Scalar>(beta: u32) -> Result<T> {
    if beta == 0 {
        return Err(Error::InvalidArgument("beta must be >= 1".into()));
    }
    let b = T::of(beta as f64);
    let two = T::of(2.0);
    Ok((b + T::one()) * (two * b + T::one()) / (T::PI().powi(2 * beta as i32) * b))
}

/// `omega_alpha = (tau_beta t n)^(1 / (2 beta + 1))`.
pub fn omega_alpha<T: Scalar>(beta: u32, t: T, n: usize) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("t must be > 0, got {t}")));
    }
    if n == 0 {
        return Err(Error::HorizonTooSmall { n, min: 1 });
    }
    let tau: T = tau_beta(beta)?;
    let exponent = T::one() / T::of((2 * beta + 1) as f64);
    Ok((tau * t * T::of_usize(n)).powf(exponent))
}

/// `j0 = [omega / ln n]`.
pub fn j_zero<T: Scalar>(omega: T, n: usize) -> usize {
    let r = omega / T::of_usize(n).ln();
    r.floor().as_f64().max(0.0) as usize
}

fn check_horizon(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::HorizonTooSmall { n, min: 2 });
    }
    Ok(())
}

fn weight_from_parts<T: Scalar>(beta: u32, omega: T, j0: usize, j: usize) -> T {
    if j >= 1 && j <= j0 {
        return T::one();
    }
    let jt = T::of_usize(j);
    if j >= 1 && jt <= omega {
        T::one() - (jt / omega).powi(beta as i32)
    } else {
        T::zero()
    }
}

/// `gamma_alpha(j)` for `alpha = (beta, t)`.
pub fn pinsker_weight<T: Scalar>(beta: u32, t: T, n: usize, j: usize) -> Result<T> {
    check_horizon(n)?;
    let omega = omega_alpha(beta, t, n)?;
    Ok(weight_from_parts(beta, omega, j_zero(omega, n), j))
}

/// Full Pinsker sequence for `alpha`, truncated to `j <= n`.
pub fn pinsker_sequence<T: Scalar>(alpha: Alpha<T>, n: usize) -> Result<WeightSequence<T>> {
    check_horizon(n)?;
    let omega = omega_alpha(alpha.beta, alpha.t, n)?;
    let j0 = j_zero(omega, n);
    let end = (omega.floor().as_f64().max(0.0) as usize).min(n);
    let values = (1..=end).map(|j| weight_from_parts(alpha.beta, omega, j0, j)).collect();
    WeightSequence::new(values, Some(alpha))
}

/// Default `epsilon(n) = 1 / ln(n + 1)`.
pub fn default_epsilon(n: usize) -> f64 {
    1.0 / ((n + 1) as f64).ln()
}

/// Default `k*(n) = ceil(sqrt(ln(n + 1)))`, at least 1.
pub fn default_k_star(n: usize) -> u32 {
    (((n + 1) as f64).ln().sqrt().ceil() as u32).max(1)
}

/// `m = [1 / epsilon^2]`.
pub fn grid_m(epsilon: f64) -> u32 {
    // 1/(0.1 * 0.1) evaluates to 99.99999999999997
    (1.0 / (epsilon * epsilon) + 1e-9).floor() as u32
}

/// Candidate family `Gamma = {gamma_alpha : alpha in {1..k*} x {eps, ..., m eps}}`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightGrid<T> {
    n: usize,
    k_star: u32,
    epsilon: T,
    m: u32,
    members: Vec<WeightSequence<T>>,
    dropped: Vec<Alpha<T>>,
}

impl<T: Scalar> WeightGrid<T> {
    /// Builds the grid for horizon `n`. Members with an empty support are
    /// dropped (and logged), since every candidate needs `#(gamma) > 0`.
    pub fn build(n: usize, k_star: Option<u32>, epsilon: Option<f64>) -> Result<Self> {
        check_horizon(n)?;
        let epsilon = epsilon.unwrap_or_else(|| default_epsilon(n));
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be in (0, 1], got {epsilon}")));
        }
        let k_star = k_star.unwrap_or_else(|| default_k_star(n));
        if k_star == 0 {
            return Err(Error::InvalidArgument("k* must be >= 1".into()));
        }
        let m = grid_m(epsilon);
        let mut members = Vec::with_capacity((k_star * m) as usize);
        let mut dropped = Vec::new();
        for beta in 1..=k_star {
            for i in 1..=m {
                let alpha = Alpha { beta, t_index: i, t: T::of(i as f64 * epsilon) };
                let seq = pinsker_sequence(alpha, n)?;
                if seq.count() == 0 {
                    log::warn!("dropping alpha = ({beta}, {}) at n = {n}: empty support", alpha.t);
                    dropped.push(alpha);
                } else {
                    members.push(seq);
                }
            }
        }
        Ok(Self { n, k_star, epsilon: T::of(epsilon), m, members, dropped })
    }

    /// A custom family, e.g. for tests. Members are used in the given order.
    pub fn from_members(n: usize, members: Vec<WeightSequence<T>>) -> Result<Self> {
        for g in &members {
            let c = g.count();
            if c == 0 || g.support_end() > n {
                return Err(Error::InvalidArgument(format!(
                    "grid member must have 0 < #(gamma) and support within n = {n}"
                )));
            }
        }
        Ok(Self { n, k_star: 0, epsilon: T::zero(), m: 0, members, dropped: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_star(&self) -> u32 {
        self.k_star
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn members(&self) -> &[WeightSequence<T>] {
        &self.members
    }

    pub fn dropped(&self) -> &[Alpha<T>] {
        &self.dropped
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `nu = card(Gamma)`.
    pub fn nu(&self) -> usize {
        self.members.len()
    }

    /// `mu = max #(gamma)`.
    pub fn mu(&self) -> usize {
        self.members.iter().map(|g| g.count()).max().unwrap_or(0)
    }

    /// Largest support end over the family.
    pub fn max_support(&self) -> usize {
        self.members.iter().map(|g| g.support_end()).max().unwrap_or(0)
    }

    /// CSV with columns `beta,t,omega,j0,support,sq_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "beta,t,omega,j0,support,sq_norm")?;
        for g in &self.members {
            let Some(a) = g.label() else { continue };
            let omega: T = omega_alpha(a.beta, a.t, self.n)?;
            writeln!(
                w,
                "{},{},{},{},{},{}",
                a.beta,
                fmt_real(a.t),
                fmt_real(omega),
                j_zero(omega, self.n),
                g.count(),
                fmt_real(g.sq_norm())
            )?;
        }
        Ok(())
    }
}
