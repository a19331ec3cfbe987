use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};
use rustfft::FftNum;
use serde::Serialize;

/// Floating point scalar the estimators are generic over: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + FftNum + Sum + Debug + Display + Serialize + Default {
    /// Converts a finite `f64` literal into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("representable integer")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// `t - floor(t)`, in `[0, 1)`.
    #[inline]
    fn fract_part(self) -> Self {
        let f = self - self.floor();
        // floor rounding can leave exactly 1.0 for tiny negative inputs
        if f >= Self::one() {
            Self::zero()
        } else {
            f
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
