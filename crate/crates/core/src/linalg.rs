//! Small dense-vector helpers. Everything in this crate works on `&[f64]`.

use crate::error::{Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(a: &[f64], what: &'static str) -> Result<()> {
    if all_finite(a) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
