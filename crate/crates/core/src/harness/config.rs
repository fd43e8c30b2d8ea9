//! JSON experiment configurations.
//!
//! ```json
//! {"kind": "rate", "spec": "../examples/exp1.json", "p": 2,
//!  "n_grid": [64, 128, 256], "route": "two_sample_mc", "m": 2048, "reps": 32}
//! ```
//!
//! `spec` is a path (relative to the config file) or an inline spec object.

use crate::clt_bounds::{DenominatorForm, WqPolicy};
use crate::distributions::{load_spec, parse_spec, SpecFile};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How `W_p(ν_n, γ)` is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Exact law of `S_n` by convolution and the quantile coupling; 1-d lattice laws only.
    QuantileExact,
    TwoSampleMc,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::QuantileExact => "quantile_exact",
            Route::TwoSampleMc => "two_sample_mc",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "quantile" | "quantile_exact" => Ok(Route::QuantileExact),
            "mc" | "two_sample_mc" => Ok(Route::TwoSampleMc),
            other => Err(Error::invalid("route", format!("unknown route `{other}` (quantile | mc)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecSource {
    Path(String),
    Inline(serde_json::Value),
}

impl SpecSource {
    pub fn load(&self, base: &Path) -> Result<SpecFile> {
        match self {
            SpecSource::Path(p) => load_spec(&base.join(p)),
            SpecSource::Inline(v) => parse_spec(&serde_json::to_string_pretty(v).expect("json value"), "inline"),
        }
    }
}

fn default_m() -> usize {
    2048
}
fn default_reps() -> usize {
    32
}
fn default_hermite_mc() -> usize {
    1_000_000
}
fn default_c() -> f64 {
    1.0
}
fn default_mc_pairs() -> usize {
    crate::distributions::DEFAULT_MC_PAIRS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub spec: SpecSource,
    pub p: f64,
    pub n_grid: Vec<usize>,
    pub route: Route,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Draws for the Gaussian functionals (the reference constants).
    #[serde(default = "default_hermite_mc")]
    pub hermite_mc: usize,
    /// Also estimate at `2m` on the largest `n` (two-sample route).
    #[serde(default)]
    pub m_doubling: bool,
}

/// `beta_sq_X` as a function of `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaSchedule {
    Fixed(f64),
    /// `scale · n^exponent`.
    Power { scale: f64, exponent: f64 },
}

impl BetaSchedule {
    pub fn beta_sq(&self, n: usize) -> f64 {
        match *self {
            BetaSchedule::Fixed(b) => b,
            BetaSchedule::Power { scale, exponent } => scale * (n as f64).powf(exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub spec: SpecSource,
    pub p: f64,
    /// Exponent of the plug-in `W_q`; `r` follows from `1/q + 1/r = 1/p`.
    pub q: f64,
    pub n_grid: Vec<usize>,
    pub beta: BetaSchedule,
    #[serde(default = "default_c")]
    pub c: f64,
    pub wq: WqPolicy,
    /// Estimator for the empirical side; the exact route is used when possible.
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc_pairs")]
    pub mc_pairs: usize,
    #[serde(default = "default_hermite_mc")]
    pub hermite_mc: usize,
    /// `beta_sq_X` values tried at the first grid point.
    #[serde(default)]
    pub beta_sweep: Vec<f64>,
    #[serde(default)]
    pub denominator: DenominatorForm,
}

impl BoundConfig {
    pub fn r(&self) -> f64 {
        1.0 / (1.0 / self.p - 1.0 / self.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Rate(RateConfig),
    Bound(BoundConfig),
    Verify {
        #[serde(default)]
        seed: u64,
    },
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::SpecFile {
        location: format!("{} line {}, column {}", path.display(), e.line(), e.column()),
        reason: e.to_string(),
    })
}
