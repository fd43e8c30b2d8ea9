//! Gaussian special functions.

use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile `Φ^{-1}(u)`.
pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    -SQRT_2 * erfc_inv(2.0 * u)
}

/// `Φ^{-1}(1 - v)` evaluated from the upper-tail mass `v`.
pub fn normal_quantile_upper(v: f64) -> f64 {
    -normal_quantile(v)
}

/// `‖Z‖_p = E[‖Z‖^p]^{1/p}` for a standard Gaussian vector in `R^d`.
pub fn gaussian_norm_p(d: usize, p: f64) -> f64 {
    let d = d as f64;
    let log_moment = 0.5 * p * 2f64.ln() + ln_gamma(0.5 * (d + p)) - ln_gamma(0.5 * d);
    (log_moment / p).exp()
}
