//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the toolkit computes with: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for converting an `f64` constant into the working scalar.
#[inline]
pub(crate) fn fl<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 converts to scalar")
}
