//! Plain dense-vector kernels.
//!
//! Deliberately simple loops over slices: problem sizes here are desk-scale,
//! and the fixed left-to-right accumulation order is part of the
//! reproducibility contract (traces must be byte-identical across runs), so
//! there is nothing to win from BLAS bindings or data-parallel reductions.

use crate::scalar::Scalar;

/// Inner product `<a, b>`.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Squared Euclidean norm.
#[inline]
pub fn norm_sq<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

/// Euclidean norm.
#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    norm_sq(a).sqrt()
}

/// Squared Euclidean distance `||a - b||^2`. Computed without a square
/// root so that exactly representable squared distances stay exact — the
/// extrapolation factor is a ratio of these and its worked examples are
/// asserted to the bit.
#[inline]
pub fn distance_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Euclidean distance `||a - b||`.
#[inline]
pub fn distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    distance_sq(a, b).sqrt()
}

/// Componentwise difference `a - b`.
#[inline]
pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// In-place `out += c * v`.
#[inline]
pub fn add_scaled<S: Scalar>(out: &mut [S], c: S, v: &[S]) {
    debug_assert_eq!(out.len(), v.len());
    for (o, &x) in out.iter_mut().zip(v) {
        *o = *o + c * x;
    }
}

/// `x + c * v` as a fresh vector.
#[inline]
pub fn affine_step<S: Scalar>(x: &[S], c: S, v: &[S]) -> Vec<S> {
    debug_assert_eq!(x.len(), v.len());
    x.iter().zip(v).map(|(&xi, &vi)| xi + c * vi).collect()
}

/// True when every component is finite.
#[inline]
pub fn all_finite<S: Scalar>(a: &[S]) -> bool {
    a.iter().all(|v| v.is_finite())
}
