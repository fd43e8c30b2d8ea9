//! Numerical laboratory for rates of convergence in the multivariate central
//! limit theorem, measured in Wasserstein distance of order `p >= 2`.
//!
//! The crate is organised bottom-up:
//!
//! * [`multilinear`]: dense tensors over `(R^d)^{⊗k}`, Hilbert–Schmidt
//!   geometry and multidimensional Hermite tensors.
//! * [`distributions`]: declarative source laws, exact standardisation,
//!   sampling, moment tensors, difference moments and exact 1-d
//!   convolution powers.
//! * [`clt_bounds`]: the truncated difference functionals, the implicit
//!   time-split `ε`, the non-asymptotic bound and its asymptotic constant.
//! * [`wasserstein`]: independent estimators of `W_p(ν_n, γ)`.
//! * [`interpolation`]: Ornstein–Uhlenbeck interpolation and exact score
//!   functions of finite Gaussian mixtures.
//! * [`harness`]: experiment orchestration, verification suite and output
//!   emission used by the command-line front end.

pub mod clt_bounds;
pub mod distributions;
pub mod error;
pub mod harness;
pub mod interpolation;
pub mod multilinear;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod wasserstein;

pub use error::{Error, Result};

/// A scalar Monte Carlo (or deterministic) estimate.
///
/// `std_error` is `None` for values computed exactly.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: None,
        }
    }

    pub fn stochastic(value: f64, std_error: f64) -> Self {
        Self {
            value,
            std_error: Some(std_error),
        }
    }

    /// Standard error, or zero for exact values.
    pub fn se(&self) -> f64 {
        self.std_error.unwrap_or(0.0)
    }
}
