//! Estimators of `W_p(ν_n, γ)`.
//!
//! * [`wp_quantile_exact`]: one-dimensional finite laws against `N(0, 1)` by
//!   the quantile coupling, integrated deterministically.
//! * [`wp_assignment`]: exact optimal matching between equal-size clouds.
//! * [`wp_two_sample`]: replicated matching of `S_n` draws against Gaussian
//!   draws, with a standard error across replications.

mod assignment;
mod quantile;
mod two_sample;

pub use assignment::{assignment_plan, plan_cost, sorted_coupling_cost, wp_assignment, MAX_POINTS};
pub use quantile::{wp_quantile_exact, wp_quantile_exact_with_error, QuantileIntegral, DEFAULT_QUAD_ORDER};
pub use two_sample::{m_doubling, wp_pair_bound_for_theorem, wp_two_sample, TransportEstimate, TransportMethod};
