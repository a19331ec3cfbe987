//! Trigonometric orthonormal basis of `L2[0, 1]`.
//!
//! `phi_1 = 1`, and for `j >= 2`, `phi_j(t) = sqrt(2) cos(2 pi [j/2] t)` when
//! `j` is even and `sqrt(2) sin(2 pi [j/2] t)` when `j` is odd. Arguments are
//! reduced to their fractional part before any trigonometric evaluation.

use crate::error::{Error, Result};
use crate::Scalar;

/// 1-based index into the trigonometric basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(usize);

impl BasisIndex {
    pub fn new(j: usize) -> Result<Self> {
        if j == 0 {
            return Err(Error::InvalidIndex(j));
        }
        Ok(Self(j))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Integer frequency `[j/2]`.
    #[inline]
    pub fn frequency(self) -> usize {
        self.0 / 2
    }

    #[inline]
    pub fn is_cosine(self) -> bool {
        self.0.is_multiple_of(2)
    }
}

impl TryFrom<usize> for BasisIndex {
    type Error = Error;

    fn try_from(j: usize) -> Result<Self> {
        Self::new(j)
    }
}

/// `2 pi {p t}` computed through two fractional-part reductions.
#[inline]
fn reduced_angle<T: Scalar>(p: usize, t: T) -> T {
    let u = t.fract_part();
    let v = (T::of_usize(p) * u).fract_part();
    T::TAU() * v
}

/// Evaluates `phi_j(t)`.
#[inline]
pub fn phi<T: Scalar>(j: BasisIndex, t: T) -> T {
    if j.get() == 1 {
        return T::one();
    }
    let angle = reduced_angle(j.frequency(), t);
    let trig = if j.is_cosine() { angle.cos() } else { angle.sin() };
    T::SQRT_2() * trig
}

/// Derivative of `phi_j` at `t`.
#[inline]
pub fn phi_derivative<T: Scalar>(j: BasisIndex, t: T) -> T {
    if j.get() == 1 {
        return T::zero();
    }
    let p = j.frequency();
    let angle = reduced_angle(p, t);
    let scale = T::SQRT_2() * T::TAU() * T::of_usize(p);
    if j.is_cosine() {
        -scale * angle.sin()
    } else {
        scale * angle.cos()
    }
}

/// `(phi_1(t), ..., phi_{j_max}(t))`.
pub fn eval_all<T: Scalar>(j_max: usize, t: T) -> Vec<T> {
    (1..=j_max).map(|j| phi(BasisIndex(j), t)).collect()
}

pub const MIN_GRAM_QUAD_POINTS: usize = 64;

fn check_quad(quad_points: usize) -> Result<()> {
    if quad_points < MIN_GRAM_QUAD_POINTS {
        return Err(Error::InvalidArgument(format!(
            "quad_points must be >= {MIN_GRAM_QUAD_POINTS}, got {quad_points}"
        )));
    }
    Ok(())
}

/// `int_0^1 phi_i phi_j dt` by the composite midpoint rule.
pub fn gram<T: Scalar>(i: BasisIndex, j: BasisIndex, quad_points: usize) -> Result<T> {
    check_quad(quad_points)?;
    let q = T::of_usize(quad_points);
    let half = T::of(0.5);
    let sum = (0..quad_points).fold(T::zero(), |acc, k| {
        let t = (T::of_usize(k) + half) / q;
        acc + phi(i, t) * phi(j, t)
    });
    Ok(sum / q)
}

/// Full `j_max x j_max` midpoint Gram matrix, row-major. The basis is
/// tabulated once so this is much cheaper than `j_max^2` calls to [`gram`].
pub fn gram_matrix<T: Scalar>(j_max: usize, quad_points: usize) -> Result<Vec<Vec<T>>> {
    check_quad(quad_points)?;
    let q = T::of_usize(quad_points);
    let half = T::of(0.5);
    let table: Vec<Vec<T>> = (1..=j_max)
        .map(|j| (0..quad_points).map(|k| phi(BasisIndex(j), (T::of_usize(k) + half) / q)).collect())
        .collect();
    let mut out = vec![vec![T::zero(); j_max]; j_max];
    for a in 0..j_max {
        for b in a..j_max {
            let s = table[a].iter().zip(&table[b]).fold(T::zero(), |acc, (&x, &y)| acc + x * y);
            out[a][b] = s / q;
            out[b][a] = s / q;
        }
    }
    Ok(out)
}

const LANES: usize = 4;
const RESYNC_EVERY: usize = 256;

/// Projects weighted point masses onto the basis:
/// `out[j - 1] = sum_k weights[k] * phi_j(points[k])` for `j = 1..=j_max`.
///
/// Successive frequencies are generated by complex rotation, resynchronised
/// with exact trigonometry every few hundred steps, which keeps the cost at a
/// handful of multiply-adds per (point, frequency) pair.
pub fn project_points<T: Scalar>(points: &[T], weights: &[T], j_max: usize) -> Vec<T> {
    assert_eq!(points.len(), weights.len(), "points and weights differ in length");
    let mut out = vec![T::zero(); j_max];
    if j_max == 0 || points.is_empty() {
        return out;
    }
    out[0] = weights.iter().fold(T::zero(), |acc, &w| acc + w);
    let n_freq = j_max / 2;
    if n_freq == 0 {
        return out;
    }

    // pad to a whole number of lanes with zero-weight points
    let k = points.len().div_ceil(LANES) * LANES;
    let mut base_c = vec![T::one(); k];
    let mut base_s = vec![T::zero(); k];
    let mut w = vec![T::zero(); k];
    let mut u = vec![T::zero(); k];
    for (idx, (&t, &wt)) in points.iter().zip(weights).enumerate() {
        let angle = reduced_angle(1, t);
        base_c[idx] = angle.cos();
        base_s[idx] = angle.sin();
        w[idx] = wt;
        u[idx] = t.fract_part();
    }
    let mut c = base_c.clone();
    let mut s = base_s.clone();
    let sqrt2 = T::SQRT_2();

    for p in 1..=n_freq {
        if p > 1 && (p - 1) % RESYNC_EVERY == 0 {
            let pt = T::of_usize(p);
            for idx in 0..k {
                let angle = T::TAU() * (pt * u[idx]).fract_part();
                c[idx] = angle.cos();
                s[idx] = angle.sin();
            }
        }
        let mut acc_c = [T::zero(); LANES];
        let mut acc_s = [T::zero(); LANES];
        for ((((cc, ss), bc), bs), ww) in c
            .chunks_exact_mut(LANES)
            .zip(s.chunks_exact_mut(LANES))
            .zip(base_c.chunks_exact(LANES))
            .zip(base_s.chunks_exact(LANES))
            .zip(w.chunks_exact(LANES))
        {
            for l in 0..LANES {
                acc_c[l] = acc_c[l] + ww[l] * cc[l];
                acc_s[l] = acc_s[l] + ww[l] * ss[l];
                let nc = cc[l] * bc[l] - ss[l] * bs[l];
                let ns = ss[l] * bc[l] + cc[l] * bs[l];
                cc[l] = nc;
                ss[l] = ns;
            }
        }
        let sum_c = (acc_c[0] + acc_c[1]) + (acc_c[2] + acc_c[3]);
        let sum_s = (acc_s[0] + acc_s[1]) + (acc_s[2] + acc_s[3]);
        out[2 * p - 1] = sqrt2 * sum_c;
        if 2 * p < j_max {
            out[2 * p] = sqrt2 * sum_s;
        }
    }
    out
}
