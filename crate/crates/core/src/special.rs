//! Scalar special functions used throughout the crate.
//!
//! Everything that can overflow is evaluated in log space.

use statrs::function::gamma;

/// Natural log of the Gamma function.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// `ln(n!)`
#[inline]
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln Γ(x + k) − ln Γ(x)` for a non-negative integer `k`, as a sum of logs.
///
/// Exact up to rounding in each term, so it does not suffer the cancellation
/// that the difference of two large log-Gamma values does when `x` is huge.
#[inline]
pub fn ln_rising_factorial(x: f64, k: u32) -> f64 {
    (0..k).map(|i| (x + i as f64).ln()).sum()
}

/// Standard normal CDF, `Φ(x) = erfc(−x/√2)/2`.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Logistic function, evaluated without overflow for either sign of `eta`.
#[inline]
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + exp(eta))`
#[inline]
pub fn softplus(eta: f64) -> f64 {
    eta.max(0.0) + (-eta.abs()).exp().ln_1p()
}

/// `ln Σ exp(v)`
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
