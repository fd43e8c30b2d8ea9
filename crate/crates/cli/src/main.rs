//! `cltlab`: command-line front end.
//!
//! Results go to stdout as JSON. The exit code is 0 on success, 1 when a
//! verification property fails and 2 on any error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use cltlab::clt_bounds::{compute_terms_with, theorem_bound_with, DenominatorForm, TermsOptions, WqPolicy};
use cltlab::distributions::{convolve_power, load_spec, moment_tensor, SpecFile, DEFAULT_MERGE_EPS};
use cltlab::harness::{
    emit_outputs, load_config, run_bound_comparison, run_rate_experiment, run_verify_suite, ExperimentConfig, RateConfig, Route, SpecSource,
    VerifyReport,
};
use cltlab::interpolation::{discretize_1d, score_integral, AtomicLaw, ScoreIntegralConfig, DEFAULT_GRID_ATOMS};
use cltlab::wasserstein::{wp_quantile_exact, wp_two_sample, TransportEstimate, TransportMethod, DEFAULT_QUAD_ORDER};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "cltlab", version, about = "Wasserstein CLT rates: bounds, estimators and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// E[X^{⊗q}] of a spec.
    Moments {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        q: usize,
    },
    /// Ingredients of the bound for n i.i.d. summands.
    Terms {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long = "beta-sq")]
        beta_sq: f64,
        #[arg(long, default_value_t = cltlab::distributions::DEFAULT_MC_PAIRS)]
        mc_pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The non-asymptotic bound and its four terms.
    Bound {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long = "beta-sq")]
        beta_sq: f64,
        /// Generic constant.
        #[arg(long = "C", alias = "c", default_value_t = 1.0)]
        c: f64,
        /// Order of the plug-in W_q; defaults to p + 1.
        #[arg(long)]
        q: Option<f64>,
        /// auto | value:V | bonis:K
        #[arg(long, default_value = "auto")]
        wq: String,
        /// theorem | split
        #[arg(long, default_value = "theorem")]
        denominator: String,
        #[arg(long, default_value_t = 1024)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = cltlab::distributions::DEFAULT_MC_PAIRS)]
        mc_pairs: usize,
    },
    /// W_p(ν_n, γ) by the exact quantile route or two-sample matching.
    Wp {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 2048)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// quantile | mc
        #[arg(long, default_value = "mc")]
        route: String,
    },
    /// Rate fit over an n grid; writes CSV, JSON and rate files.
    Rate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long = "n-grid", value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        /// quantile | mc
        #[arg(long, default_value = "mc")]
        route: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2048)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append a timestamp column to the CSV.
        #[arg(long)]
        timestamp: bool,
    },
    /// ∫_0^∞ ‖ρ_t‖_p dt for the law of S_n (n = 1 by default).
    ScoreIntegral {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0.1)]
        t_min_split: f64,
        #[arg(long, default_value_t = 20.0)]
        t_max: f64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Grid size when a continuous 1-d law has to be discretised.
        #[arg(long, default_value_t = DEFAULT_GRID_ATOMS)]
        atoms: usize,
    },
    /// Property suite; exits 1 if any property fails.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the report as JSON instead of one line per property.
        #[arg(long)]
        json: bool,
    },
    /// Run an experiment config (kind rate, bound or verify).
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        timestamp: bool,
    },
}

fn spec(path: &Path) -> Result<SpecFile> {
    load_spec(path).with_context(|| format!("loading spec {}", path.display()))
}

fn print(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn parse_wq(s: &str, m: usize, reps: usize, seed: u64) -> Result<WqPolicy> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let num = || arg.parse::<f64>().map_err(|_| anyhow!("--wq {kind} needs a number, e.g. {kind}:1"));
    Ok(match kind {
        "auto" => WqPolicy::Auto { m, reps, seed },
        "value" => WqPolicy::Value(num()?),
        "bonis" => WqPolicy::Bonis { k: num()? },
        other => bail!("unknown --wq policy `{other}` (auto | value:V | bonis:K)"),
    })
}

fn parse_denominator(s: &str) -> Result<DenominatorForm> {
    match s {
        "theorem" => Ok(DenominatorForm::Theorem),
        "split" => Ok(DenominatorForm::Split),
        other => bail!("unknown --denominator `{other}` (theorem | split)"),
    }
}

fn wp(spec: &SpecFile, n: usize, p: f64, m: usize, reps: usize, seed: u64, route: Route) -> Result<TransportEstimate> {
    Ok(match route {
        Route::QuantileExact => {
            if spec.spec.dim != 1 {
                bail!("the quantile route needs a 1-d law");
            }
            let law = convolve_power(&spec.spec, n, DEFAULT_MERGE_EPS)?;
            TransportEstimate::exact(wp_quantile_exact(&law, p, DEFAULT_QUAD_ORDER)?, TransportMethod::QuantileExact)
        }
        Route::TwoSampleMc => wp_two_sample(&spec.spec, n, p, m, reps, seed)?,
    })
}

fn print_verify(report: &VerifyReport, as_json: bool) -> Result<ExitCode> {
    if as_json {
        print(report)?;
    } else {
        for c in &report.checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = report.failures().len();
        println!("{} of {} properties passed", report.checks.len() - failed, report.checks.len());
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn score_law(spec: &SpecFile, n: usize, p: f64, atoms: usize) -> Result<(AtomicLaw, Option<f64>)> {
    if n > 1 {
        let law = convolve_power(&spec.spec, n, DEFAULT_MERGE_EPS).context("S_n must be exactly representable (1-d finite law)")?;
        return Ok((AtomicLaw::from_discrete_1d(&law), None));
    }
    if spec.spec.is_finite_atom() {
        return Ok((AtomicLaw::from_spec(&spec.spec)?, None));
    }
    let disc = discretize_1d(&spec.spec, atoms, p)?;
    Ok((AtomicLaw::from_discrete_1d(&disc.law), Some(disc.wp_error)))
}

fn run_rate(spec: &SpecFile, config: &RateConfig, out: &Path, timestamp: bool) -> Result<Value> {
    let fit = run_rate_experiment(spec, config)?;
    let records: Vec<_> = if timestamp { fit.records.iter().cloned().map(|r| r.stamped()).collect() } else { fit.records.clone() };
    let mut files = emit_outputs(&records, out, timestamp)?;
    let fit_path = out.join("rate_fit.json");
    std::fs::write(&fit_path, serde_json::to_string_pretty(&fit)?).with_context(|| format!("writing {}", fit_path.display()))?;
    files.push(fit_path);
    Ok(json!({
        "fitted_constant": fit.fitted_constant,
        "fitted_slope": fit.fitted_slope,
        "reference_constant": fit.reference_constant,
        "relative_gap": fit.relative_gap,
        "lattice": fit.lattice,
        "m_doubling": fit.m_doubling,
        "degenerate": fit.degenerate,
        "files": files,
    }))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Moments { spec: path, q } => {
            let s = spec(&path)?;
            let t = moment_tensor(&s.spec, q)?;
            print(&json!({"spec_id": s.id, "dim": t.dim(), "order": t.order(), "hs_norm": t.hs_norm(), "data": t.as_slice()}))?;
        }
        Command::Terms {
            spec: path,
            n,
            p,
            beta_sq,
            mc_pairs,
            seed,
        } => {
            let s = spec(&path)?;
            let options = TermsOptions {
                mc_pairs,
                pair_seed: seed,
                hermite_seed: seed,
                ..TermsOptions::default()
            };
            let t = compute_terms_with(&s.spec, n, p, beta_sq, &options)?;
            let lambda: Vec<f64> = t.lambda.iter().copied().collect();
            print(&json!({
                "spec_id": s.id, "d": t.d, "n": t.n, "p": t.p, "beta_w": t.beta_w,
                "norm_m3": t.norm_m3, "norm_m4": t.norm_m4, "m3_hermite_pnorm": t.m3_hermite,
                "l_p": t.l_p, "l_4_at_0": t.l_4(0.0), "l_p2_at_0": t.l_p2(0.0),
                "lprime_4": t.lprime_4, "lprime_p2": t.lprime_p2, "ldd_4_at_0": t.ldd4_tail(0.0),
                "lambda": lambda, "beta_2": t.beta_2, "beta_p": t.beta_p,
            }))?;
        }
        Command::Bound {
            spec: path,
            n,
            p,
            beta_sq,
            c,
            q,
            wq,
            denominator,
            m,
            reps,
            seed,
            mc_pairs,
        } => {
            let s = spec(&path)?;
            let q = q.unwrap_or(p + 1.0);
            if !(q > p) {
                bail!("--q must exceed --p");
            }
            let r = 1.0 / (1.0 / p - 1.0 / q);
            let options = TermsOptions {
                mc_pairs,
                pair_seed: seed,
                hermite_seed: seed,
                ..TermsOptions::default()
            };
            let terms = compute_terms_with(&s.spec, n, p, beta_sq, &options)?;
            let w = parse_wq(&wq, m, reps, seed)?.resolve(&s.spec, n, q)?;
            let report = theorem_bound_with(&terms, q, r, w, c, parse_denominator(&denominator)?)?;
            print(&report)?;
        }
        Command::Wp {
            spec: path,
            n,
            p,
            m,
            reps,
            seed,
            route,
        } => {
            let s = spec(&path)?;
            print(&wp(&s, n, p, m, reps, seed, Route::parse(&route)?)?)?;
        }
        Command::Rate {
            spec: path,
            p,
            n_grid,
            route,
            out,
            m,
            reps,
            seed,
            timestamp,
        } => {
            let s = spec(&path)?;
            let config = RateConfig {
                spec: SpecSource::Path(path.display().to_string()),
                p,
                n_grid,
                route: Route::parse(&route)?,
                m,
                reps,
                seed,
                hermite_mc: 1_000_000,
                m_doubling: false,
            };
            print(&run_rate(&s, &config, &out, timestamp)?)?;
        }
        Command::ScoreIntegral {
            spec: path,
            p,
            n,
            t_min_split,
            t_max,
            tolerance,
            atoms,
        } => {
            let s = spec(&path)?;
            let (law, disc_err) = score_law(&s, n, p, atoms)?;
            let config = ScoreIntegralConfig {
                t_min_split,
                t_max,
                tolerance,
                ..ScoreIntegralConfig::default()
            };
            let v = score_integral(&law, p, &config)?;
            print(&json!({"spec_id": s.id, "n": n, "p": p, "result": v, "discretization_wp_error": disc_err}))?;
        }
        Command::Verify { seed, json } => return print_verify(&run_verify_suite(seed), json),
        Command::Experiment { config, out, timestamp } => {
            let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
            match load_config(&config)? {
                ExperimentConfig::Verify { seed } => return print_verify(&run_verify_suite(seed), false),
                ExperimentConfig::Rate(rc) => {
                    let s = rc.spec.load(&base)?;
                    let out = out.ok_or_else(|| anyhow!("rate experiments need --out"))?;
                    print(&run_rate(&s, &rc, &out, timestamp)?)?;
                }
                ExperimentConfig::Bound(bc) => {
                    let s = bc.spec.load(&base)?;
                    let cmp = run_bound_comparison(&s, &bc)?;
                    if let Some(out) = out {
                        let records = cmp.records(bc.seed);
                        emit_outputs(&records, &out, timestamp)?;
                        let path = out.join("bound_comparison.json");
                        std::fs::write(&path, serde_json::to_string_pretty(&cmp)?).with_context(|| format!("writing {}", path.display()))?;
                    }
                    print(&cmp)?;
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wq_policies() {
        assert_eq!(parse_wq("bonis:2", 1, 1, 0).unwrap(), WqPolicy::Bonis { k: 2.0 });
        assert_eq!(parse_wq("value:0.25", 1, 1, 0).unwrap(), WqPolicy::Value(0.25));
        assert_eq!(parse_wq("auto", 64, 4, 9).unwrap(), WqPolicy::Auto { m: 64, reps: 4, seed: 9 });
        assert!(parse_wq("bonis", 1, 1, 0).is_err());
        assert!(parse_wq("sinkhorn:1", 1, 1, 0).is_err());
    }

    #[test]
    fn denominators() {
        assert_eq!(parse_denominator("split").unwrap(), DenominatorForm::Split);
        assert!(parse_denominator("other").is_err());
    }
}
