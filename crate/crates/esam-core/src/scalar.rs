//! Scalar abstraction: the floating-point capabilities the solvers rely on.
//!
//! A thin umbrella over `num-traits`: ordinary IEEE arithmetic, conversions
//! from `f64` (tolerances and configuration values are specified in double
//! precision), iterator summation, and formatting for diagnostics. `f32` and
//! `f64` satisfy it automatically via the blanket impl.

use core::fmt::{Debug, Display};
use core::iter::Sum;
use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used throughout the toolkit.
pub trait Scalar:
    Float + FromPrimitive + Sum + Display + Debug + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Sum + Display + Debug + Send + Sync + 'static
{
}

/// Convert an `f64` constant (tolerance, weight, configured parameter) into
/// the working scalar type.
///
/// Infallible for the supported IEEE types: conversion into `f32` rounds.
#[inline]
pub fn real<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("f64 constants convert into every supported scalar")
}

/// Lossy view of a scalar as `f64`, for error messages and reports.
#[inline]
pub fn approx_f64<S: Scalar>(v: S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
