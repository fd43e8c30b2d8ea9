use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cltlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cltlab")).args(args).output().expect("binary runs")
}

fn spec(name: &str) -> String {
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/specs").join(name);
    path.display().to_string()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn help_lists_subcommands() {
    let out = cltlab(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["moments", "terms", "bound", "wp", "rate", "score-integral", "verify", "experiment"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn moments_of_the_skewed_exponential() {
    let v = json(&cltlab(&["moments", "--spec", &spec("exponential.json"), "--q", "3"]));
    assert_eq!(v["order"], 3);
    assert!((v["data"][0].as_f64().unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn terms_and_bound_report() {
    let s = spec("rademacher.json");
    let t = json(&cltlab(&["terms", "--spec", &s, "--n", "64", "--p", "2", "--beta-sq", "4"]));
    assert!(t["beta_2"].as_f64().unwrap() > 0.0);
    let b = json(&cltlab(&["bound", "--spec", &s, "--n", "64", "--p", "2", "--beta-sq", "4", "--C", "1", "--wq", "bonis:1"]));
    let sum: f64 = ["term_leading", "term_lattice", "term_mixed", "term_tail"].iter().map(|k| b[k].as_f64().unwrap()).sum();
    assert!((sum - b["total"].as_f64().unwrap()).abs() <= 1e-12 * sum);
    assert_eq!(b["c_used"], 1.0);
}

#[test]
fn bound_surfaces_the_hypothesis_violation() {
    let out = cltlab(&["bound", "--spec", &spec("rademacher_2d.json"), "--n", "64", "--p", "2", "--beta-sq", "1", "--wq", "value:0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("positive-definite"));
}

#[test]
fn wp_routes_agree_in_kind() {
    let s = spec("rademacher.json");
    let exact = json(&cltlab(&["wp", "--spec", &s, "--n", "256", "--p", "2", "--route", "quantile"]));
    assert_eq!(exact["method"], "quantile_exact");
    assert!(exact["std_error"].is_null());
    let mc = json(&cltlab(&["wp", "--spec", &s, "--n", "16", "--p", "2", "--m", "128", "--reps", "4", "--route", "mc"]));
    assert!(mc["std_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn rate_writes_its_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let v = json(&cltlab(&[
            "rate", "--spec", &spec("rademacher.json"), "--p", "2", "--n-grid", "64,128,256,512", "--route", "mc", "--m", "128", "--reps", "4",
            "--seed", "3", "--out", out.to_str().unwrap(),
        ]));
        assert!(v["fitted_slope"].as_f64().unwrap().is_finite());
        std::fs::read_to_string(out.join("records.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    assert!(a.starts_with("spec_id,d,n,p,seed,method,wp,se,sqrtn_wp,bound_total\n"));
    assert_eq!(a.lines().count(), 5);
    for f in ["records.json", "rate_fit.json", "rate_rademacher_two_sample_mc.dat"] {
        assert!(dir.path().join("a").join(f).exists(), "{f}");
    }
}

#[test]
fn score_integral_of_a_point_mass() {
    let v = json(&cltlab(&["score-integral", "--spec", &spec("point_mass_3d.json"), "--p", "2"]));
    assert!((v["result"]["value"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-6);
}

#[test]
fn errors_exit_with_two() {
    let out = cltlab(&["moments", "--spec", "/nonexistent/spec.json", "--q", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/spec.json"));
    let out = cltlab(&["rate", "--spec", &spec("exponential.json"), "--p", "2", "--n-grid", "4,8,16,32", "--route", "quantile", "--out", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("incompatible"));
}

#[test]
fn experiment_config_runs() {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/rademacher_exact_rate.json");
    let dir = tempfile::tempdir().unwrap();
    let v = json(&cltlab(&["experiment", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]));
    assert!((v["fitted_slope"].as_f64().unwrap() + 0.5).abs() < 0.03);
}

#[test]
fn verify_exits_zero_when_green() {
    let out = cltlab(&["verify", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("29 of 29 properties passed"));
}
