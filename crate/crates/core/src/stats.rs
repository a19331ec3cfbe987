//! Order-stable aggregation helpers for Monte Carlo output.

use crate::Scalar;

/// Pairwise (cascade) summation. The association order depends only on the
/// slice length, so the result is bit-stable for a fixed input order.
pub fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe<T> {
    pub mean: T,
    pub se: T,
}

pub fn mean_se<T: Scalar>(xs: &[T]) -> MeanSe<T> {
    let r = xs.len();
    if r == 0 {
        return MeanSe { mean: T::nan(), se: T::nan() };
    }
    let rt = T::of_usize(r);
    let mean = pairwise_sum(xs) / rt;
    if r == 1 {
        return MeanSe { mean, se: T::zero() };
    }
    let dev: Vec<T> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / T::of_usize(r - 1);
    MeanSe { mean, se: (var / rt).sqrt() }
}
