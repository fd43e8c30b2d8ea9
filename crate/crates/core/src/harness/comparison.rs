use super::config::BoundConfig;
use super::rate::ls_slope;
use super::records::ExperimentRecord;
use crate::clt_bounds::{exact_lattice_law, theorem_bound_with, BoundReport, CltTerms, SourceSummary, TermsOptions};
use crate::distributions::SpecFile;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::wasserstein::{wp_quantile_exact, wp_two_sample, TransportMethod, DEFAULT_QUAD_ORDER};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub beta_sq_x: f64,
    pub empirical: f64,
    pub empirical_se: Option<f64>,
    pub empirical_method: TransportMethod,
    pub report: BoundReport,
    /// `total / empirical`.
    pub ratio: f64,
    pub sqrt_n_term_lattice: f64,
}

/// Outcome of one `beta_sq_X` in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta_sq_x: f64,
    pub n: usize,
    pub accepted: bool,
    /// Smallest eigenvalue of the truncated difference moment when rejected.
    pub min_eigenvalue: Option<f64>,
    pub total: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub spec_id: String,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub c: f64,
    pub rows: Vec<BoundRow>,
    pub sweep: Vec<SweepRow>,
    /// Log-log slope of the ratio in `n`; near zero when the bound tracks the rate.
    pub ratio_slope: Option<f64>,
}

impl BoundComparison {
    pub fn records(&self, seed: u64) -> Vec<ExperimentRecord> {
        self.rows
            .iter()
            .map(|row| {
                let mut r = ExperimentRecord::new(
                    &self.spec_id,
                    row.report.inputs.d,
                    row.n,
                    self.p,
                    seed,
                    row.empirical_method.as_str(),
                    row.empirical,
                    row.empirical_se,
                );
                r.bound_total = Some(row.report.total);
                r
            })
            .collect()
    }
}

fn empirical(spec: &SpecFile, n: usize, config: &BoundConfig) -> Result<(f64, Option<f64>, TransportMethod)> {
    if let Some(law) = exact_lattice_law(&spec.spec, n)? {
        return Ok((wp_quantile_exact(&law, config.p, DEFAULT_QUAD_ORDER)?, None, TransportMethod::QuantileExact));
    }
    let est = wp_two_sample(&spec.spec, n, config.p, config.m, config.reps, derive_seed(config.seed, n as u64))?;
    Ok((est.value, est.std_error, TransportMethod::TwoSampleMc))
}

/// Bound against the empirical distance on each grid point, plus an optional
/// sweep over `beta_sq_X` at the first grid point.
pub fn run_bound_comparison(spec: &SpecFile, config: &BoundConfig) -> Result<BoundComparison> {
    let (p, q) = (config.p, config.q);
    if !(q > p) {
        return Err(Error::invalid("q", "must exceed p"));
    }
    let r = config.r();
    let options = TermsOptions {
        mc_pairs: config.mc_pairs,
        pair_seed: derive_seed(config.seed, 1 << 40),
        hermite_mc: config.hermite_mc,
        hermite_seed: derive_seed(config.seed, 1 << 41),
    };
    let d = spec.spec.dim;
    let centred = spec.spec.mean().amax() < 1e-9;
    let white = (spec.spec.covariance() - nalgebra::DMatrix::<f64>::identity(d, d)).amax() < 1e-9;
    if !(centred && white) {
        return Err(Error::invalid("spec", "bound comparison needs a standardised law"));
    }
    let source = Arc::new(SourceSummary::new(&spec.spec, &options)?);
    let mut rows = vec![];
    for &n in &config.n_grid {
        let beta_sq_x = config.beta.beta_sq(n);
        let terms = CltTerms::iid(source.clone(), n, p, beta_sq_x, &options)?;
        let w_q = config.wq.resolve(&spec.spec, n, q)?;
        let report = theorem_bound_with(&terms, q, r, w_q, config.c, config.denominator)?;
        let (emp, se, method) = empirical(spec, n, config)?;
        rows.push(BoundRow {
            n,
            beta_sq_x,
            empirical: emp,
            empirical_se: se,
            empirical_method: method,
            ratio: report.total / emp,
            sqrt_n_term_lattice: (n as f64).sqrt() * report.term_lattice,
            report,
        });
    }
    let mut sweep = vec![];
    if let Some(&n) = config.n_grid.first() {
        for &beta_sq_x in &config.beta_sweep {
            let row = match CltTerms::iid(source.clone(), n, p, beta_sq_x, &options) {
                Ok(terms) => {
                    let w_q = config.wq.resolve(&spec.spec, n, q)?;
                    let rep = theorem_bound_with(&terms, q, r, w_q, config.c, config.denominator)?;
                    SweepRow {
                        beta_sq_x,
                        n,
                        accepted: true,
                        min_eigenvalue: None,
                        total: Some(rep.total),
                        detail: "accepted".into(),
                    }
                }
                Err(e @ Error::CorollaryHypothesisViolated { min_eigenvalue }) => SweepRow {
                    beta_sq_x,
                    n,
                    accepted: false,
                    min_eigenvalue: Some(min_eigenvalue),
                    total: None,
                    detail: e.to_string(),
                },
                Err(e) => return Err(e),
            };
            sweep.push(row);
        }
    }
    let usable: Vec<&BoundRow> = rows.iter().filter(|r| r.ratio.is_finite() && r.ratio > 0.0).collect();
    let ratio_slope = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|r| (r.n as f64).ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|r| r.ratio.ln()).collect();
        Some(ls_slope(&xs, &ys))
    } else {
        None
    };
    Ok(BoundComparison {
        spec_id: spec.id.clone(),
        p,
        q,
        r,
        c: config.c,
        rows,
        sweep,
        ratio_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clt_bounds::WqPolicy;
    use crate::distributions::DistributionSpec;
    use crate::harness::config::{BetaSchedule, SpecSource};

    fn config(grid: Vec<usize>, beta: BetaSchedule, sweep: Vec<f64>) -> BoundConfig {
        BoundConfig {
            spec: SpecSource::Path(String::new()),
            p: 2.0,
            q: 3.0,
            n_grid: grid,
            beta,
            c: 1.0,
            wq: WqPolicy::Bonis { k: 1.0 },
            m: 128,
            reps: 4,
            seed: 5,
            mc_pairs: 100_000,
            hermite_mc: 10_000,
            beta_sweep: sweep,
            denominator: Default::default(),
        }
    }

    #[test]
    fn rademacher_sweep_rejects_small_beta() {
        let spec = SpecFile {
            id: "rad2".into(),
            spec: DistributionSpec::rademacher(2),
        };
        let out = run_bound_comparison(&spec, &config(vec![64], BetaSchedule::Fixed(4.0), vec![1.0, 4.0, 8.0])).unwrap();
        let accepted: Vec<bool> = out.sweep.iter().map(|s| s.accepted).collect();
        assert_eq!(accepted, vec![false, true, true]);
        assert_eq!(out.sweep[0].min_eigenvalue, Some(0.0));
        assert!(out.rows[0].ratio.is_finite() && out.rows[0].ratio > 0.0);
    }

    #[test]
    fn shrinking_beta_kills_the_lattice_term() {
        let spec = SpecFile {
            id: "exp".into(),
            spec: DistributionSpec::standardized_exponential(1),
        };
        let sched = BetaSchedule::Power { scale: 1.0, exponent: -0.5 };
        let out = run_bound_comparison(&spec, &config(vec![64, 256, 1024, 4096], sched, vec![])).unwrap();
        let scaled: Vec<f64> = out.rows.iter().map(|r| r.sqrt_n_term_lattice).collect();
        for w in scaled.windows(2) {
            assert!(w[1] < w[0], "{scaled:?}");
        }
        let recs = out.records(5);
        assert!(recs.iter().all(|r| r.bound_total.is_some()));
    }
}
