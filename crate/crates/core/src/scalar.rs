//! Floating point abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::LinalgScalar;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;

/// Real scalar usable by the layers, losses and training loops: `f32` or `f64`.
///
/// Training runs in `f32`; gradient verification and the numeric oracles run in `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + LinalgScalar
    + FftNum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, rounding to the nearest representable value.
    fn cast(v: f64) -> Self;

    fn as_f64(self) -> f64;

    fn count(v: usize) -> Self {
        Self::cast(v as f64)
    }
}

impl Scalar for f32 {
    #[inline]
    fn cast(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline]
    fn cast(v: f64) -> Self {
        v
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Converts a slice between scalar types.
pub fn convert<A: Scalar, B: Scalar>(values: &[A]) -> Vec<B> {
    values.iter().map(|v| B::cast(v.as_f64())).collect()
}
