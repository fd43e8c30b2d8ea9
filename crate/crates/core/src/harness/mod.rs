//! Experiment orchestration: rate fits, bound-versus-empirical tables, the
//! property suite, configuration files and output emission.

mod comparison;
mod config;
mod rate;
mod records;
mod verify;

pub use comparison::{run_bound_comparison, BoundComparison, BoundRow, SweepRow};
pub use config::{load_config, BetaSchedule, BoundConfig, ExperimentConfig, RateConfig, Route, SpecSource};
pub use rate::{fit, ls_slope, run_rate_experiment, LatticeConstants, MDoubling, RateFit};
pub use records::{emit_outputs, rate_table, records_csv, ExperimentRecord, CSV_HEADER};
pub use verify::{
    epsilon_slope_fit, lattice_lower_bound_values, psi_ratio_max, rosenthal_ratios, run_verify_suite, run_verify_suite_with, score_identity_gap,
    stein_domination_rows, Check, HermiteFn, VerifyReport,
};
