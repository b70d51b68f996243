//! Scalar abstractions.
//!
//! The variational algebra only needs field operations, so it is written
//! against [`Scalar`] and can be evaluated in exact rational arithmetic.
//! Everything that samples, transforms or integrates fields needs
//! [`Real`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::ops::Neg;

use num_traits::{Float, FloatConst, FromPrimitive, Num};
use rustfft::FftNum;
use serde::Serialize;

/// Ordered field scalar: enough for the closed-form functional algebra.
pub trait Scalar:
    Copy + Num + Neg<Output = Self> + PartialOrd + FromPrimitive + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Copy
        + Num
        + Neg<Output = T>
        + PartialOrd
        + FromPrimitive
        + Debug
        + Send
        + Sync
        + 'static
{
}

/// Floating-point scalar used by grids, transforms and integrators.
pub trait Real: Scalar + Float + FloatConst + FftNum + Display + LowerExp + Serialize + Default {}

impl Real for f32 {}
impl Real for f64 {}

/// Exact ratio `num / den` in any scalar type.
#[inline]
pub fn frac<T: Scalar>(num: i32, den: i32) -> T {
    T::from_i32(num).expect("small integer") / T::from_i32(den).expect("small integer")
}

/// Integer literal.
#[inline]
pub fn int<T: Scalar>(n: i32) -> T {
    T::from_i32(n).expect("small integer")
}

/// Floating literal; panics only if the target type cannot hold it.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("representable literal")
}

/// Lossy conversion to `f64` for reporting.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `max(|a|, |b|, tiny)`-style scale used in relative comparisons.
#[inline]
pub fn rel_err<T: Real>(got: T, want: T) -> T {
    let scale = want.abs().max(T::min_positive_value());
    (got - want).abs() / scale
}
