//! Semimartingale noise `xi_t = rho1 w_t + rho2 z_t`: a standard Brownian
//! motion plus a compound Poisson process with rate `lambda` and i.i.d.
//! mean-zero, unit-variance marks.

use std::io::Write;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::basis::project_points;
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::rng::ReplicateStreams;
use crate::Scalar;

/// Law of the compound Poisson marks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JumpLaw {
    /// `+1` or `-1` with probability 1/2.
    Rademacher,
    StandardGaussian,
}

impl JumpLaw {
    /// `E Y^4`.
    pub fn m4(self) -> f64 {
        match self {
            JumpLaw::Rademacher => 1.0,
            JumpLaw::StandardGaussian => 3.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            JumpLaw::Rademacher => "rademacher",
            JumpLaw::StandardGaussian => "gaussian",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "rademacher" => Some(JumpLaw::Rademacher),
            "gaussian" | "standard-gaussian" => Some(JumpLaw::StandardGaussian),
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            JumpLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            JumpLaw::StandardGaussian => rng.sample(StandardNormal),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseParams<T> {
    rho1: T,
    rho2: T,
    lambda: T,
    jump_law: JumpLaw,
}

impl<T: Scalar> NoiseParams<T> {
    pub fn new(rho1: T, rho2: T, lambda: T, jump_law: JumpLaw) -> Result<Self> {
        if !rho1.is_finite() || !rho2.is_finite() {
            return Err(Error::InvalidNoise("amplitudes must be finite".into()));
        }
        if !(rho1.abs() + rho2.abs() > T::zero()) {
            return Err(Error::InvalidNoise("need |rho1| + |rho2| > 0".into()));
        }
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(Error::InvalidNoise(format!("intensity must be finite and > 0, got {lambda}")));
        }
        Ok(Self { rho1, rho2, lambda, jump_law })
    }

    pub fn rho1(&self) -> T {
        self.rho1
    }

    pub fn rho2(&self) -> T {
        self.rho2
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn jump_law(&self) -> JumpLaw {
        self.jump_law
    }

    /// `sigma* = rho1^2 + lambda rho2^2`, the per-coefficient noise variance.
    pub fn sigma_star(&self) -> T {
        self.rho1 * self.rho1 + self.lambda * self.rho2 * self.rho2
    }
}

/// Arrival times `T_k` in `(0, n]` and marks `Y_k` of one compound Poisson path.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct JumpRecord<T> {
    pub arrival_times: Vec<T>,
    pub marks: Vec<T>,
}

impl<T: Scalar> JumpRecord<T> {
    pub fn len(&self) -> usize {
        self.arrival_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival_times.is_empty()
    }

    /// CSV with columns `k,T_k,Y_k`, `k` 1-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,T_k,Y_k")?;
        for (k, (t, y)) in self.arrival_times.iter().zip(&self.marks).enumerate() {
            writeln!(w, "{},{},{}", k + 1, fmt_real(*t), fmt_real(*y))?;
        }
        Ok(())
    }
}

/// Rate-`lambda` Poisson arrivals on `(0, n]` with i.i.d. marks.
pub fn sample_jumps<T: Scalar, R: Rng + ?Sized>(p: &NoiseParams<T>, n: usize, rng: &mut R) -> JumpRecord<T> {
    let horizon = n as f64;
    let rate = p.lambda.as_f64();
    let mut arrival_times = Vec::new();
    let mut t = 0.0f64;
    loop {
        let gap: f64 = rng.sample(Exp1);
        t += gap / rate;
        if t > horizon {
            break;
        }
        arrival_times.push(t);
    }
    let marks = arrival_times.iter().map(|_| T::of(p.jump_law.sample(rng))).collect();
    // arrivals are generated in f64; rounding to f32 may merge neighbours
    let arrival_times = arrival_times.into_iter().map(T::of).collect();
    JumpRecord { arrival_times, marks }
}

/// `(xi_{j,n})_{j <= j_max}` together with the jumps that produced it.
#[derive(Clone, Debug)]
pub struct CoefficientNoise<T> {
    pub values: Vec<T>,
    pub jumps: JumpRecord<T>,
}

/// Exact draw of `xi_{j,n} = n^{-1/2} int_0^n phi_j dxi` for `j <= j_max`.
///
/// For integer `n` the Brownian integrals `n^{-1/2} int phi_j dw` are i.i.d.
/// standard normal, and the jump integral is the finite sum
/// `n^{-1/2} rho2 sum_k phi_j(T_k) Y_k`.
pub fn simulate_coefficient_noise<T: Scalar>(
    p: &NoiseParams<T>,
    n: usize,
    j_max: usize,
    streams: &mut ReplicateStreams,
) -> Result<CoefficientNoise<T>> {
    if j_max > n {
        return Err(Error::Budget { requested: j_max, available: n });
    }
    let jumps = sample_jumps(p, n, &mut streams.jumps);
    let scale = p.rho2 / T::of_usize(n).sqrt();
    let jump_part = if p.rho2 == T::zero() || jumps.is_empty() {
        vec![T::zero(); j_max]
    } else {
        project_points(&jumps.arrival_times, &jumps.marks, j_max)
    };
    let values = jump_part
        .into_iter()
        .map(|z| {
            let g: f64 = streams.brownian.sample(StandardNormal);
            p.rho1 * T::of(g) + scale * z
        })
        .collect();
    Ok(CoefficientNoise { values, jumps })
}

pub const MIN_STEPS_PER_UNIT: usize = 8;

/// Noise increments over the uniform grid of `[0, n]` with
/// `n * steps_per_unit` cells.
#[derive(Clone, Debug)]
pub struct PathNoise<T> {
    pub increments: Vec<T>,
    pub steps_per_unit: usize,
    pub jumps: JumpRecord<T>,
}

/// Cell index of a jump at time `t`. Cells are left-open, `(i/s, (i+1)/s]`,
/// so a jump on a grid point belongs to the cell it closes.
pub fn jump_cell<T: Scalar>(t: T, steps_per_unit: usize, cells: usize) -> usize {
    let x = (t * T::of_usize(steps_per_unit)).ceil();
    let c = x.to_usize().unwrap_or(0).saturating_sub(1);
    c.min(cells.saturating_sub(1))
}

/// Discretised path: `rho1 sqrt(dt) g` per cell plus `rho2` times the marks
/// of the jumps falling in the cell.
pub fn simulate_path_increments<T: Scalar>(
    p: &NoiseParams<T>,
    n: usize,
    steps_per_unit: usize,
    streams: &mut ReplicateStreams,
) -> Result<PathNoise<T>> {
    if steps_per_unit < MIN_STEPS_PER_UNIT {
        return Err(Error::InvalidArgument(format!(
            "steps_per_unit must be >= {MIN_STEPS_PER_UNIT}, got {steps_per_unit}"
        )));
    }
    let cells = n * steps_per_unit;
    let sd = p.rho1 * (T::one() / T::of_usize(steps_per_unit)).sqrt();
    let mut increments: Vec<T> = (0..cells)
        .map(|_| {
            let g: f64 = streams.brownian.sample(StandardNormal);
            sd * T::of(g)
        })
        .collect();
    let jumps = sample_jumps(p, n, &mut streams.jumps);
    for (&t, &y) in jumps.arrival_times.iter().zip(&jumps.marks) {
        let c = jump_cell(t, steps_per_unit, cells);
        increments[c] = increments[c] + p.rho2 * y;
    }
    Ok(PathNoise { increments, steps_per_unit, jumps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_se;

    fn params(r1: f64, r2: f64, l: f64) -> NoiseParams<f64> {
        NoiseParams::new(r1, r2, l, JumpLaw::Rademacher).unwrap()
    }

    #[test]
    fn sigma_star_examples() {
        assert_eq!(params(1.0, 0.0, 1.0).sigma_star(), 1.0);
        assert_eq!(params(0.0, 1.0, 2.0).sigma_star(), 2.0);
        assert_eq!(params(0.5, 0.5, 4.0).sigma_star(), 1.25);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(NoiseParams::new(0.0, 0.0, 1.0, JumpLaw::Rademacher).is_err());
        assert!(NoiseParams::new(1.0, 0.0, 0.0, JumpLaw::Rademacher).is_err());
        assert!(NoiseParams::new(1.0, 0.0, -1.0, JumpLaw::Rademacher).is_err());
        assert!(NoiseParams::new(f64::NAN, 1.0, 1.0, JumpLaw::Rademacher).is_err());
    }

    #[test]
    fn jump_laws_have_unit_variance() {
        let mut s = ReplicateStreams::new(11, 0);
        for law in [JumpLaw::Rademacher, JumpLaw::StandardGaussian] {
            let xs: Vec<f64> = (0..40_000).map(|_| law.sample(&mut s.jumps)).collect();
            let m = mean_se(&xs);
            assert!(m.mean.abs() < 4.0 * m.se);
            let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
            let v = mean_se(&sq);
            assert!((v.mean - 1.0).abs() < 4.0 * v.se.max(1e-12), "{law:?}");
        }
    }

    #[test]
    fn arrivals_are_increasing_in_horizon() {
        let p = params(0.0, 1.0, 3.0);
        let mut s = ReplicateStreams::new(5, 1);
        let rec = sample_jumps(&p, 20, &mut s.jumps);
        assert_eq!(rec.arrival_times.len(), rec.marks.len());
        assert!(rec.arrival_times.windows(2).all(|w| w[0] < w[1]));
        assert!(rec.arrival_times.iter().all(|&t| t > 0.0 && t <= 20.0));
        assert!(rec.marks.iter().all(|y| y.abs() == 1.0));
    }

    // Poisson oracle: the count has mean lambda n and variance lambda n.
    #[test]
    fn jump_count_has_poisson_mean() {
        let p = params(0.0, 1.0, 1.5);
        let n = 4;
        let reps = 10_000u64;
        let counts: Vec<f64> = (0..reps)
            .map(|r| {
                let mut s = ReplicateStreams::new(99, r);
                sample_jumps(&p, n, &mut s.jumps).len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let ln = 1.5 * n as f64;
        assert!((mean - ln).abs() < 3.0 * (ln / reps as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn budget_is_enforced() {
        let p = params(1.0, 0.0, 1.0);
        let mut s = ReplicateStreams::new(1, 0);
        assert!(matches!(
            simulate_coefficient_noise(&p, 5, 6, &mut s),
            Err(Error::Budget { requested: 6, available: 5 })
        ));
    }

    #[test]
    fn no_brownian_no_jumps_gives_zero() {
        // lambda n tiny: find a replicate without any jump
        let p = params(0.0, 1.0, 1e-6);
        let mut s = ReplicateStreams::new(3, 0);
        let xi = simulate_coefficient_noise(&p, 2, 2, &mut s).unwrap();
        assert!(xi.jumps.is_empty());
        assert!(xi.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn brownian_only_coefficients_have_variance_rho1_sq() {
        let p = params(0.7, 0.0, 1.0);
        let reps = 10_000u64;
        let sq: Vec<f64> = (0..reps)
            .map(|r| {
                let mut s = ReplicateStreams::new(17, r);
                let xi = simulate_coefficient_noise(&p, 8, 3, &mut s).unwrap();
                xi.values[2] * xi.values[2]
            })
            .collect();
        let m = mean_se(&sq);
        assert!((m.mean - 0.49).abs() < 3.0 * m.se, "{m:?}");
    }

    #[test]
    fn grid_point_jump_goes_to_closing_cell() {
        assert_eq!(jump_cell(0.5f64, 8, 16), 3);
        assert_eq!(jump_cell(0.51f64, 8, 16), 4);
        assert_eq!(jump_cell(2.0f64, 8, 16), 15);
        assert_eq!(jump_cell(1e-9f64, 8, 16), 0);
    }

    #[test]
    fn path_rejects_coarse_grid() {
        let p = params(1.0, 0.0, 1.0);
        let mut s = ReplicateStreams::new(1, 0);
        assert!(simulate_path_increments(&p, 2, 4, &mut s).is_err());
    }

    #[test]
    fn path_jumps_land_in_increments() {
        let p = params(0.0, 2.0, 2.0);
        let mut s = ReplicateStreams::new(8, 2);
        let path = simulate_path_increments(&p, 3, 10, &mut s).unwrap();
        let total: f64 = path.increments.iter().sum();
        let marks: f64 = path.jumps.marks.iter().map(|y| 2.0 * y).sum();
        assert!((total - marks).abs() < 1e-12);
    }

    #[test]
    fn jump_csv_layout() {
        let rec = JumpRecord { arrival_times: vec![0.5f64, 1.25], marks: vec![1.0, -1.0] };
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "k,T_k,Y_k");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("2,1.25"));
    }
}
