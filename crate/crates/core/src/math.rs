//! Thin `libm` wrappers so the rest of the crate reads like std code.

pub use core::f64::consts::{E, PI, TAU};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn tan(x: f64) -> f64 {
    libm::tan(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

/// Reduce `t` to `[0, 1)`.
#[inline]
pub fn wrap_unit(t: f64) -> f64 {
    let r = t - floor(t);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Euclidean norm of a slice.
pub fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Largest absolute entry (0 for empty input).
pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.abs() > m { x.abs() } else { m })
}

/// Largest absolute entry of the difference of two slices of equal length.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| if (x - y).abs() > m { (x - y).abs() } else { m })
}
