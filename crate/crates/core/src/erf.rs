//! Gaussian special functions shared by the predictor and the baselines.

use std::f64::consts::PI;

/// Error function, `2/sqrt(pi) * int_0^x exp(-t^2) dt`.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Mass of `N(mean, var)` on the interval `[lo, hi]`.
///
/// For a degenerate distribution (`var` below `1e-15`) this is the indicator
/// of `mean` lying in the interval.
pub fn normal_interval_mass(mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if var <= 1e-15 {
        return if mean >= lo && mean <= hi { 1.0 } else { 0.0 };
    }
    let s = (2.0 * var).sqrt();
    0.5 * (erf((hi - mean) / s) - erf((lo - mean) / s))
}

/// `E[max(-V, 0)]` for `V ~ N(mean, var)`: the expected magnitude of the
/// negative part. Equals `-1` times the truncated mean
/// `int_{-inf}^0 v f(v) dv`.
pub fn expected_negative_part(mean: f64, var: f64) -> f64 {
    if var <= 1e-30 {
        return (-mean).max(0.0);
    }
    let s = var.sqrt();
    let z = mean / s;
    (-mean * norm_cdf(-z) + s * norm_pdf(z)).max(0.0)
}
