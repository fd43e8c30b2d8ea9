use cltlab::clt_bounds::{solve_epsilon, CltTerms, SourceSummary, TermsOptions, WqPolicy};
use cltlab::distributions::{convolve_power, moment_tensor, DistributionSpec, Discrete1D, Marginal, Points, DEFAULT_MERGE_EPS};
use cltlab::harness::{records_csv, ExperimentRecord};
use cltlab::wasserstein::{assignment_plan, plan_cost, sorted_coupling_cost, wp_quantile_exact, DEFAULT_QUAD_ORDER};
use proptest::prelude::*;
use std::sync::Arc;

fn quick() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(quick())]

    #[test]
    fn assignment_matches_sorting_in_one_dimension(
        xs in prop::collection::vec(-5.0f64..5.0, 2..40),
        shift in -2.0f64..2.0,
        p in prop::sample::select(vec![1.0, 2.0, 3.0]),
    ) {
        let ys: Vec<f64> = xs.iter().rev().map(|v| 0.7 * v + shift).collect();
        let x = Points::new(1, xs).unwrap();
        let y = Points::new(1, ys).unwrap();
        let plan = assignment_plan(&x, &y, p).unwrap();
        let a = plan_cost(&x, &y, &plan, p);
        let s = sorted_coupling_cost(&x, &y, p).unwrap();
        prop_assert!((a - s).abs() <= 1e-9 * s.max(1.0), "{a} vs {s}");
    }

    #[test]
    fn point_mass_distance_is_closed_form(c in -3.0f64..3.0) {
        // W_2(δ_c, γ)² = E(Z - c)² = 1 + c²
        let law = Discrete1D::new(vec![c], vec![1.0]).unwrap();
        let w = wp_quantile_exact(&law, 2.0, DEFAULT_QUAD_ORDER).unwrap();
        prop_assert!((w * w - 1.0 - c * c).abs() < 1e-8);
    }

    #[test]
    fn convolution_keeps_standardisation(w in 0.05f64..0.95, n in 1usize..300) {
        let spec = DistributionSpec::product(Marginal::two_point(0.0, 1.0, w).unwrap(), 1).unwrap().standardize().unwrap();
        let law = convolve_power(&spec, n, DEFAULT_MERGE_EPS).unwrap();
        prop_assert!(law.mean().abs() < 1e-10);
        prop_assert!((law.variance() - 1.0).abs() < 1e-10);
        prop_assert!((law.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardisation_is_idempotent(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4..8),
        raw in prop::collection::vec(0.1f64..1.0, 8),
    ) {
        let atoms: Vec<Vec<f64>> = pts.iter().map(|&(a, b)| vec![a, b + 0.3 * a * a]).collect();
        let total: f64 = raw[..atoms.len()].iter().sum();
        let weights: Vec<f64> = raw[..atoms.len()].iter().map(|w| w / total).collect();
        let spec = DistributionSpec::discrete(atoms, weights).unwrap();
        // nearly collinear clouds are legitimately rejected
        if let Ok(once) = spec.standardize() {
            let twice = once.standardize().unwrap();
            let (a, b) = (moment_tensor(&once, 3).unwrap(), moment_tensor(&twice, 3).unwrap());
            for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((u - v).abs() < 1e-8 * (1.0 + u.abs()));
            }
        }
    }

    #[test]
    fn epsilon_is_resolved_or_sits_on_a_jump(k in 0.1f64..10.0, log_n in 4u32..14) {
        let spec = DistributionSpec::rademacher(1);
        let options = TermsOptions { mc_pairs: 1000, hermite_mc: 1000, ..TermsOptions::default() };
        let src = Arc::new(SourceSummary::new(&spec, &options).unwrap());
        let n = 1usize << log_n;
        let terms = CltTerms::iid(src, n, 2.0, 4.0, &options).unwrap();
        let w = WqPolicy::Bonis { k }.resolve(&spec, n, 3.0).unwrap();
        let sol = solve_epsilon(&terms, 3.0, 6.0, w).unwrap();
        prop_assert!(sol.epsilon > 0.0 && sol.epsilon.is_finite());
        prop_assert!(sol.converged() || sol.at_jump, "{sol:?}");
    }

    #[test]
    fn csv_keeps_doubles_exact(v in prop::num::f64::NORMAL, n in 1usize..100_000) {
        let rec = ExperimentRecord::new("s", 1, n, 2.0, 0, "quantile_exact", v.abs(), None);
        let text = records_csv(&[rec.clone()], false).unwrap();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let row = reader.records().next().unwrap().unwrap();
        prop_assert_eq!(row[6].parse::<f64>().unwrap().to_bits(), rec.wp_estimate.to_bits());
        prop_assert_eq!(row[8].parse::<f64>().unwrap().to_bits(), rec.sqrt_n_scaled.to_bits());
    }
}
