//! Pointwise bounds on `‖ρ_t‖_p` for small, medium and large `t`.
//!
//! `η_p(t) = Δ(t)/(p - 1)` with `Δ(t) = e^{2t} - 1`.

use super::terms::CltTerms;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub fn delta(t: f64) -> f64 {
    (2.0 * t).exp_m1()
}

pub fn eta_p(t: f64, p: f64) -> f64 {
    delta(t) / (p - 1.0)
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", "must be positive and finite"));
    }
    Ok(())
}

/// `C(√(dp)(1 + Δ^{-1/2}) + p L_p^{1/p})`.
pub fn psi1(t: f64, terms: &CltTerms, c: f64) -> Result<f64> {
    check_t(t)?;
    let p = terms.p;
    let d = terms.d as f64;
    Ok(c * ((d * p).sqrt() * (1.0 + 1.0 / delta(t).sqrt()) + p * terms.l_p.powf(1.0 / p)))
}

/// `C(√(p(β_2 + d)) + p(β_p + L_p)^{1/p} + √(dp) β²/Δ^{3/2})`, for
/// `η_p(t) ≥ β²`.
pub fn psi2(t: f64, terms: &CltTerms, c: f64) -> Result<f64> {
    check_t(t)?;
    let p = terms.p;
    let d = terms.d as f64;
    let beta_sq = terms.beta_w * terms.beta_w;
    let eta = eta_p(t, p);
    if eta < beta_sq {
        return Err(Error::PsiDomain { eta, beta_sq });
    }
    Ok(c * ((p * (terms.beta_2 + d)).sqrt()
        + p * (terms.beta_p + terms.l_p).powf(1.0 / p)
        + (d * p).sqrt() * beta_sq / delta(t).powf(1.5)))
}

/// The large-time bound, with `W_q(ν, γ)` supplied by the caller.
pub fn psi3(t: f64, terms: &CltTerms, r: f64, w_q: f64, c: f64) -> Result<f64> {
    check_t(t)?;
    let p = terms.p;
    let eta = eta_p(t, p);
    let leading = 0.5 * (-3.0 * t).exp() * terms.m3_hermite.value;
    let third = c * r * terms.norm_m3 * w_q / eta.powf(1.5);
    let moments = c * ((p * terms.l_4(eta) / eta).sqrt()
        + p * (terms.l_p2(eta) / eta).powf(1.0 / p)
        + (p * terms.lprime_4).sqrt() / eta
        + p * terms.lprime_p2.powf(1.0 / p) / eta.powf(0.5 + 2.0 / p));
    let fourth = c * (terms.ldd4_tail(eta) + terms.norm_m4) / eta.powf(1.5);
    Ok(leading + third + moments + fourth)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeValue {
    pub regime: Regime,
    pub value: f64,
    /// Medium regime outside the domain of Ψ2, answered by Ψ1.
    pub fell_back: bool,
}

/// Ψ1 on `(0, ε1]`, Ψ2 on `(ε1, ε2]`, Ψ3 beyond, with `ε1 = β²` and `ε2`
/// the root of the ε equation.
pub fn psi_regime(t: f64, terms: &CltTerms, eps2: f64, r: f64, w_q: f64, c: f64) -> Result<RegimeValue> {
    let eps1 = terms.beta_w * terms.beta_w;
    if t <= eps1 {
        return Ok(RegimeValue {
            regime: Regime::Small,
            value: psi1(t, terms, c)?,
            fell_back: false,
        });
    }
    if t <= eps2 {
        return match psi2(t, terms, c) {
            Ok(value) => Ok(RegimeValue {
                regime: Regime::Medium,
                value,
                fell_back: false,
            }),
            Err(Error::PsiDomain { .. }) => Ok(RegimeValue {
                regime: Regime::Medium,
                value: psi1(t, terms, c)?,
                fell_back: true,
            }),
            Err(e) => Err(e),
        };
    }
    Ok(RegimeValue {
        regime: Regime::Large,
        value: psi3(t, terms, r, w_q, c)?,
        fell_back: false,
    })
}
