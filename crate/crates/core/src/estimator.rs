//! Coefficient estimates `theta_hat_{j,n} = n^{-1} int_0^n phi_j dy` and the
//! weighted least squares estimates built from them.

use std::io::{BufRead, Write};

use crate::basis::{phi, BasisIndex};
use crate::error::{Error, Result};
use crate::io::{fmt_real, parse_index, parse_real, read_rows};
use crate::signal::SignalSpec;
use crate::weights::WeightSequence;
use crate::Scalar;

/// `theta_hat_{j,n}` for `j = 1..=j_max`, with `j_max <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientEstimates<T> {
    values: Vec<T>,
    n: usize,
}

impl<T: Scalar> CoefficientEstimates<T> {
    pub fn new(values: Vec<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::HorizonTooSmall { n, min: 1 });
        }
        if values.len() > n {
            return Err(Error::Budget { requested: values.len(), available: n });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta_hat_{} is not finite", j + 1)));
        }
        Ok(Self { values, n })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_max(&self) -> usize {
        self.values.len()
    }

    /// CSV with columns `j,theta_hat`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "j,theta_hat")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", k + 1, fmt_real(*v))?;
        }
        Ok(())
    }

    /// Reads a `j,theta_hat` CSV; rows must list `j = 1, 2, ...` in order.
    pub fn read_csv<R: BufRead>(reader: R, n: usize) -> Result<Self> {
        let rows = read_rows(reader, "j,theta_hat")?;
        let mut values = Vec::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            if parse_index(&row[0])? != k + 1 {
                return Err(Error::Format(format!("row {}: expected j = {}", k + 2, k + 1)));
            }
            values.push(parse_real(&row[1])?);
        }
        Self::new(values, n)
    }
}

/// Increments `dy` of an observed path over the uniform grid of `[0, n]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathObservation<T> {
    increments: Vec<T>,
    steps_per_unit: usize,
    n: usize,
}

impl<T: Scalar> PathObservation<T> {
    pub fn new(increments: Vec<T>, steps_per_unit: usize, n: usize) -> Result<Self> {
        if steps_per_unit == 0 || n == 0 {
            return Err(Error::InvalidArgument("steps_per_unit and n must be >= 1".into()));
        }
        if increments.len() != n * steps_per_unit {
            return Err(Error::Format(format!(
                "path has {} increments, expected n * steps_per_unit = {}",
                increments.len(),
                n * steps_per_unit
            )));
        }
        Ok(Self { increments, steps_per_unit, n })
    }

    /// Noiseless observation of `S`: each increment is the midpoint-rule
    /// integral of `S` over its cell.
    pub fn from_signal(signal: &SignalSpec<T>, n: usize, steps_per_unit: usize) -> Result<Self> {
        Self::from_signal_and_noise(signal, n, steps_per_unit, None)
    }

    /// `dy = S dt + dxi` with the supplied noise increments.
    pub fn from_signal_and_noise(
        signal: &SignalSpec<T>,
        n: usize,
        steps_per_unit: usize,
        noise: Option<&[T]>,
    ) -> Result<Self> {
        let cells = n * steps_per_unit;
        if let Some(xi) = noise {
            if xi.len() != cells {
                return Err(Error::Format(format!("noise has {} cells, expected {cells}", xi.len())));
            }
        }
        let s = T::of_usize(steps_per_unit);
        let half = T::of(0.5);
        // S is 1-periodic, so one period of cell integrals is enough
        let period: Vec<T> = (0..steps_per_unit).map(|i| signal.eval((T::of_usize(i) + half) / s) / s).collect();
        let increments = (0..cells)
            .map(|c| {
                let base = period[c % steps_per_unit];
                noise.map_or(base, |xi| base + xi[c])
            })
            .collect();
        Self::new(increments, steps_per_unit, n)
    }

    pub fn increments(&self) -> &[T] {
        &self.increments
    }

    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// CSV with columns `cell,dy`, `cell` 0-based.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "cell,dy")?;
        for (c, v) in self.increments.iter().enumerate() {
            writeln!(w, "{},{}", c, fmt_real(*v))?;
        }
        Ok(())
    }

    /// Reads a `cell,dy` CSV as a single period (`n = 1`).
    pub fn read_segment_csv<R: BufRead>(reader: R) -> Result<Self> {
        let rows = read_rows(reader, "cell,dy")?;
        let mut increments = Vec::with_capacity(rows.len());
        for (k, row) in rows.iter().enumerate() {
            if parse_index(&row[0])? != k {
                return Err(Error::Format(format!("row {}: expected cell = {k}", k + 2)));
            }
            increments.push(parse_real(&row[1])?);
        }
        if increments.is_empty() {
            return Err(Error::Format("segment has no cells".into()));
        }
        let steps = increments.len();
        Self::new(increments, steps, 1)
    }
}

/// Left-point Riemann-Stieltjes approximation of `n^{-1} int_0^n phi_j dy`.
pub fn estimate_coefficients_from_path<T: Scalar>(
    obs: &PathObservation<T>,
    j_max: usize,
) -> Result<CoefficientEstimates<T>> {
    if j_max > obs.n {
        return Err(Error::Budget { requested: j_max, available: obs.n });
    }
    let s = obs.steps_per_unit;
    // phi_j is 1-periodic: fold increments by grid phase first
    let mut by_phase = vec![T::zero(); s];
    for (c, &dy) in obs.increments.iter().enumerate() {
        by_phase[c % s] = by_phase[c % s] + dy;
    }
    let st = T::of_usize(s);
    let nt = T::of_usize(obs.n);
    let values = (1..=j_max)
        .map(|j| {
            let idx = BasisIndex::new(j).unwrap();
            let sum =
                by_phase.iter().enumerate().fold(T::zero(), |acc, (r, &d)| acc + phi(idx, T::of_usize(r) / st) * d);
            sum / nt
        })
        .collect();
    CoefficientEstimates::new(values, obs.n)
}

/// `theta_hat_j = theta_j + xi_{j,n} / sqrt(n)` from true coefficients
/// and a noise vector.
pub fn estimate_from_parts<T: Scalar>(theta: &[T], noise: &[T], n: usize) -> Result<CoefficientEstimates<T>> {
    if theta.len() < noise.len() {
        return Err(Error::InsufficientCoefficients { have: theta.len(), need: noise.len() });
    }
    let root_n = T::of_usize(n).sqrt();
    let values = noise.iter().zip(theta).map(|(&xi, &th)| th + xi / root_n).collect();
    CoefficientEstimates::new(values, n)
}

/// Same as [`estimate_from_parts`] with `theta_j` computed from `S`.
pub fn estimate_coefficients_exact<T: Scalar>(
    signal: &SignalSpec<T>,
    noise: &[T],
    n: usize,
    quad_points: usize,
) -> Result<CoefficientEstimates<T>> {
    let theta = signal.fourier_coefficients(noise.len(), quad_points);
    estimate_from_parts(&theta, noise, n)
}

/// `S_gamma = sum_j gamma(j) theta_hat_j phi_j` as a coefficient signal.
pub fn weighted_estimate<T: Scalar>(gamma: &WeightSequence<T>, est: &CoefficientEstimates<T>) -> Result<SignalSpec<T>> {
    if gamma.support_end() > est.j_max() {
        return Err(Error::Budget { requested: gamma.support_end(), available: est.j_max() });
    }
    let coeffs: Vec<T> = gamma.values().iter().zip(est.values()).map(|(&g, &t)| g * t).collect();
    let coeffs = if coeffs.is_empty() { vec![T::zero()] } else { coeffs };
    SignalSpec::from_coefficients("weighted-estimate", coeffs)
}

/// `Er_n(gamma) = ||S_gamma - S||^2` in coefficient space, truncated at
/// `theta.len()` (the tail index). Indices past `j_max` contribute `theta_j^2`.
pub fn empirical_error<T: Scalar>(gamma: &WeightSequence<T>, est: &CoefficientEstimates<T>, theta: &[T]) -> Result<T> {
    if theta.len() < est.j_max() {
        return Err(Error::InsufficientCoefficients { have: theta.len(), need: est.j_max() });
    }
    if gamma.support_end() > est.j_max() {
        return Err(Error::Budget { requested: gamma.support_end(), available: est.j_max() });
    }
    let mut acc = T::zero();
    for (j, &th) in theta.iter().enumerate() {
        let fitted = if j < est.j_max() { gamma.get(j + 1) * est.values()[j] } else { T::zero() };
        let d = fitted - th;
        acc = acc + d * d;
    }
    Ok(acc)
}

/// Concatenates single-period observations into one path on `[0, k]`.
///
/// With `y` built from `x^k` by `y_t = y_{k-1} + x^k_{t-k+1} - x_0`, the
/// increments of `y` are exactly the per-period increments laid end to end.
pub fn segments_to_path<T: Scalar>(segments: &[PathObservation<T>]) -> Result<PathObservation<T>> {
    let first = segments.first().ok_or_else(|| Error::Format("no segments".into()))?;
    let steps = first.steps_per_unit;
    let mut increments = Vec::with_capacity(segments.len() * steps);
    for (k, seg) in segments.iter().enumerate() {
        if seg.n != 1 || seg.steps_per_unit != steps {
            return Err(Error::Format(format!(
                "segment {k} has n = {} and {} steps, expected n = 1 and {steps} steps",
                seg.n, seg.steps_per_unit
            )));
        }
        increments.extend_from_slice(&seg.increments);
    }
    PathObservation::new(increments, steps, segments.len())
}

/// Inverse of [`segments_to_path`].
pub fn path_to_segments<T: Scalar>(path: &PathObservation<T>) -> Vec<PathObservation<T>> {
    path.increments
        .chunks(path.steps_per_unit)
        .map(|c| PathObservation { increments: c.to_vec(), steps_per_unit: path.steps_per_unit, n: 1 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Catalogue, DEFAULT_QUAD_POINTS};

    #[test]
    fn noiseless_path_recovers_single_mode() {
        let s: SignalSpec<f64> = Catalogue::SingleMode.build();
        let obs = PathObservation::from_signal(&s, 3, 2000).unwrap();
        let est = estimate_coefficients_from_path(&obs, 3).unwrap();
        assert!((est.values()[1] - 1.0).abs() < 5e-3);
        assert!(est.values()[0].abs() < 5e-3);
        assert!(est.values()[2].abs() < 5e-3);
    }

    // Oracle: midpoint quadrature of int_0^1 phi_j S for an analytic S.
    #[test]
    fn noiseless_path_matches_quadrature_coefficients() {
        let s: SignalSpec<f64> = Catalogue::SinePlusParabola.build();
        let obs = PathObservation::from_signal(&s, 6, 2000).unwrap();
        let est = estimate_coefficients_from_path(&obs, 6).unwrap();
        let q = 20_000;
        for j in 1..=6 {
            let idx = BasisIndex::new(j).unwrap();
            let oracle: f64 = (0..q)
                .map(|k| {
                    let t = (k as f64 + 0.5) / q as f64;
                    phi(idx, t) * s.eval(t)
                })
                .sum::<f64>()
                / q as f64;
            assert!((est.values()[j - 1] - oracle).abs() < 5e-3, "j = {j}");
        }
    }

    #[test]
    fn zero_path_gives_zero_estimates() {
        let obs = PathObservation::new(vec![0.0f64; 40], 10, 4).unwrap();
        let est = estimate_coefficients_from_path(&obs, 4).unwrap();
        assert!(est.values().iter().all(|&v| v == 0.0));
        assert!(matches!(estimate_coefficients_from_path(&obs, 5), Err(Error::Budget { .. })));
    }

    #[test]
    fn exact_estimates() {
        let s: SignalSpec<f64> = Catalogue::TwoMode.build();
        let est = estimate_coefficients_exact(&s, &[0.0; 6], 10, DEFAULT_QUAD_POINTS).unwrap();
        assert_eq!(est.values(), &[0.0, 1.0, 0.0, 0.0, 0.3, 0.0]);
        let z: SignalSpec<f64> = Catalogue::Zero.build();
        let est = estimate_coefficients_exact(&z, &[2.0, -4.0], 4, DEFAULT_QUAD_POINTS).unwrap();
        assert_eq!(est.values(), &[1.0, -2.0]);
    }

    #[test]
    fn weighted_estimate_cases() {
        let est = CoefficientEstimates::new(vec![0.5f64, -1.0, 0.25, 2.0, 1.0, 3.0], 10).unwrap();
        let zero = WeightSequence::new(vec![0.0; 3], None).unwrap();
        let s = weighted_estimate(&zero, &est).unwrap();
        assert!(s.coefficients().unwrap().iter().all(|&c| c == 0.0));
        let proj = WeightSequence::projection(5);
        let s = weighted_estimate(&proj, &est).unwrap();
        assert_eq!(s.coefficients().unwrap(), &est.values()[..5]);
        let g = WeightSequence::new(vec![1.0, 0.5, 0.25], None).unwrap();
        let s = weighted_estimate(&g, &est).unwrap();
        assert_eq!(s.coefficients().unwrap(), &[0.5, -0.5, 0.0625]);
        let long = WeightSequence::projection(7);
        assert!(matches!(weighted_estimate(&long, &est), Err(Error::Budget { .. })));
    }

    #[test]
    fn empirical_error_cases() {
        let theta = vec![0.5f64, 1.0, 0.0, 0.2, 0.1];
        let est = CoefficientEstimates::new(theta[..3].to_vec(), 3).unwrap();
        let zero = WeightSequence::new(vec![0.0; 3], None).unwrap();
        let e = empirical_error(&zero, &est, &theta).unwrap();
        assert!((e - (0.25 + 1.0 + 0.04 + 0.01)).abs() < 1e-15);
        let ones = WeightSequence::projection(3);
        let e = empirical_error(&ones, &est, &theta).unwrap();
        assert!((e - 0.05).abs() < 1e-15);
    }

    // Oracle: ||S_gamma - S||^2 by midpoint quadrature in function space.
    #[test]
    fn empirical_error_matches_function_space_quadrature() {
        let theta: Vec<f64> = vec![0.3, -0.7, 0.4, 0.05, -0.2, 0.1, 0.02, -0.01];
        let s = SignalSpec::from_coefficients("s", theta.clone()).unwrap();
        let est = CoefficientEstimates::new(vec![0.35, -0.6, 0.33, 0.1, -0.25], 6).unwrap();
        let gamma = WeightSequence::new(vec![1.0, 0.9, 0.7, 0.4, 0.1], None).unwrap();
        let fitted = weighted_estimate(&gamma, &est).unwrap();
        let q = 4096;
        let quad: f64 = (0..q)
            .map(|k| {
                let t = (k as f64 + 0.5) / q as f64;
                (fitted.eval(t) - s.eval(t)).powi(2)
            })
            .sum::<f64>()
            / q as f64;
        let e = empirical_error(&gamma, &est, &theta).unwrap();
        assert!((e - quad).abs() < 1e-6);
    }

    #[test]
    fn segments_concatenate() {
        let s: SignalSpec<f64> = Catalogue::TwoMode.build();
        let one = PathObservation::from_signal(&s, 1, 64).unwrap();
        assert_eq!(segments_to_path(std::slice::from_ref(&one)).unwrap(), one);
        let two = segments_to_path(&[one.clone(), one.clone()]).unwrap();
        assert_eq!(two.n(), 2);
        let e1 = estimate_coefficients_from_path(&one, 1).unwrap();
        let e2 = estimate_coefficients_from_path(&two, 2).unwrap();
        assert!((e1.values()[0] - e2.values()[0]).abs() < 1e-15);
        let direct = PathObservation::from_signal(&s, 2, 64).unwrap();
        let e_direct = estimate_coefficients_from_path(&direct, 2).unwrap();
        assert_eq!(e2, e_direct);
        assert!(segments_to_path::<f64>(&[]).is_err());
        let other = PathObservation::from_signal(&s, 1, 32).unwrap();
        assert!(segments_to_path(&[one, other]).is_err());
    }

    #[test]
    fn split_then_concatenate_is_identity() {
        let inc: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let path = PathObservation::new(inc, 10, 3).unwrap();
        let back = segments_to_path(&path_to_segments(&path)).unwrap();
        assert_eq!(back, path);
    }

    #[test]
    fn csv_roundtrip() {
        let est = CoefficientEstimates::new(vec![0.1f64, -1.0 / 3.0, 2.5e-8], 5).unwrap();
        let mut buf = Vec::new();
        est.write_csv(&mut buf).unwrap();
        assert_eq!(CoefficientEstimates::read_csv(buf.as_slice(), 5).unwrap(), est);

        let seg = PathObservation::new(vec![0.25f64, -1.0 / 7.0, 3.0], 3, 1).unwrap();
        let mut buf = Vec::new();
        seg.write_csv(&mut buf).unwrap();
        assert_eq!(PathObservation::read_segment_csv(buf.as_slice()).unwrap(), seg);
    }

    #[test]
    fn estimates_validate_budget() {
        assert!(CoefficientEstimates::new(vec![0.0f64; 4], 3).is_err());
        assert!(CoefficientEstimates::new(vec![f64::NAN], 3).is_err());
    }
}
