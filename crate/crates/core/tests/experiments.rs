use cltlab::harness::{load_config, run_bound_comparison, run_rate_experiment, BoundComparison, ExperimentConfig, RateFit};
use std::path::{Path, PathBuf};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rate(name: &str) -> RateFit {
    let path = configs().join(name);
    let ExperimentConfig::Rate(config) = load_config(&path).unwrap() else { panic!("{name} is not a rate config") };
    let spec = config.spec.load(&configs()).unwrap();
    run_rate_experiment(&spec, &config).unwrap()
}

fn bound(name: &str) -> BoundComparison {
    let ExperimentConfig::Bound(config) = load_config(&configs().join(name)).unwrap() else { panic!("{name} is not a bound config") };
    let spec = config.spec.load(&configs()).unwrap();
    run_bound_comparison(&spec, &config).unwrap()
}

#[test]
fn every_shipped_config_parses() {
    let mut count = 0;
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 9);
}

#[test]
fn exact_rademacher_rate_is_half() {
    let fit = rate("lattice_lower_bound.json");
    assert!((fit.fitted_slope + 0.5).abs() <= 0.03, "{}", fit.fitted_slope);
    assert!(fit.records.iter().all(|r| r.sqrt_n_scaled >= 0.5));
    assert!(!fit.degenerate);
    let lattice = fit.lattice.unwrap();
    assert_eq!(lattice.span, 2.0);
    // the exact pipeline lands on the reading with 1/6 on the skewness term only
    assert!((lattice.oracle - lattice.sixth_on_skew).abs() < 1e-3, "{lattice:?}");
    assert!((lattice.as_printed - 2.0 / 12f64.sqrt() / 6.0).abs() < 1e-12);
}

#[test]
fn gaussian_source_is_flagged_not_fatal() {
    let fit = rate("gaussian_rate.json");
    assert!(fit.degenerate);
    assert!(fit.fitted_constant.is_finite());
    assert_eq!(fit.reference_constant, Some(0.0));
}

#[test]
fn beta_sweep_rejects_the_degenerate_truncation() {
    let cmp = bound("bound_rademacher_2d_sweep.json");
    let accepted: Vec<bool> = cmp.sweep.iter().map(|s| s.accepted).collect();
    assert_eq!(accepted, vec![false, true, true]);
    assert!(cmp.sweep[0].min_eigenvalue.unwrap().abs() < 1e-12);
    assert!(cmp.rows.iter().all(|r| r.ratio.is_finite() && r.ratio > 0.0));
}

#[test]
fn shrinking_truncation_kills_the_lattice_term() {
    let cmp = bound("bound_exponential_schedule.json");
    let scaled: Vec<f64> = cmp.rows.iter().map(|r| r.sqrt_n_term_lattice).collect();
    assert!(scaled.windows(2).all(|w| w[1] < w[0]), "{scaled:?}");
    // β_X = n^{-1/4}, so √n·term_lattice falls by 2^{-1/2} per factor 4 in n
    for w in scaled.windows(2) {
        assert!((w[1] / w[0] - 0.5f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn lattice_ratios_stay_within_budget() {
    for name in ["bound_rademacher_ratio.json", "bound_golden_ratio.json"] {
        let cmp = bound(name);
        for row in &cmp.rows {
            assert!(row.ratio.is_finite() && row.ratio <= 50.0, "{name} n={}: {}", row.n, row.ratio);
            assert!(row.empirical_se.is_none());
        }
        assert!(cmp.ratio_slope.unwrap().abs() <= 0.25);
    }
}
