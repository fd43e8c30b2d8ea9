use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CSV_HEADER: [&str; 10] = ["spec_id", "d", "n", "p", "seed", "method", "wp", "se", "sqrtn_wp", "bound_total"];

/// One estimate of `W_p(ν_n, γ)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub spec_id: String,
    pub d: usize,
    pub n: usize,
    pub p: f64,
    pub seed: u64,
    pub method: String,
    pub wp_estimate: f64,
    pub std_error: Option<f64>,
    /// `√n · wp_estimate`.
    pub sqrt_n_scaled: f64,
    pub bound_total: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl ExperimentRecord {
    pub fn new(spec_id: &str, d: usize, n: usize, p: f64, seed: u64, method: &str, wp: f64, se: Option<f64>) -> Self {
        Self {
            spec_id: spec_id.to_string(),
            d,
            n,
            p,
            seed,
            method: method.to_string(),
            wp_estimate: wp,
            std_error: se,
            sqrt_n_scaled: (n as f64).sqrt() * wp,
            bound_total: None,
            timestamp: None,
        }
    }

    /// Stamps the record with the current Unix time in seconds.
    pub fn stamped(mut self) -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.timestamp = Some(secs.to_string());
        self
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV text for `records`; a `timestamp` column is appended only when asked
/// for, so that default output is reproducible byte for byte.
pub fn records_csv(records: &[ExperimentRecord], with_timestamp: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    let csv_err = |e: csv::Error| Error::NonFinite(format!("csv encoding: {e}"));
    let mut header: Vec<&str> = CSV_HEADER.to_vec();
    if with_timestamp {
        header.push("timestamp");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![
            r.spec_id.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.p.to_string(),
            r.seed.to_string(),
            r.method.clone(),
            r.wp_estimate.to_string(),
            opt(r.std_error),
            r.sqrt_n_scaled.to_string(),
            opt(r.bound_total),
        ];
        if with_timestamp {
            row.push(r.timestamp.clone().unwrap_or_default());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::NonFinite(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `log2 n` against `√n W` for one (spec, method) series, sorted by `n`.
pub fn rate_table(records: &[ExperimentRecord]) -> String {
    let mut rows: Vec<&ExperimentRecord> = records.iter().collect();
    rows.sort_by_key(|r| r.n);
    let mut out = String::from("# log2_n sqrtn_wp\n");
    for r in rows {
        out.push_str(&format!("{} {}\n", (r.n as f64).log2(), r.sqrt_n_scaled));
    }
    out
}

fn write(path: &Path, text: &str) -> Result<PathBuf> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(path.to_path_buf())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes `records.csv`, `records.json` and one `rate_<spec>_<method>.dat`
/// per series into `dir` (created if missing). Returns the written paths.
pub fn emit_outputs(records: &[ExperimentRecord], dir: &Path, with_timestamp: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = vec![write(&dir.join("records.csv"), &records_csv(records, with_timestamp)?)?];
    let json = serde_json::to_string_pretty(records).map_err(|e| Error::NonFinite(format!("json encoding: {e}")))?;
    written.push(write(&dir.join("records.json"), &json)?);
    let mut series: Vec<(String, String)> = records.iter().map(|r| (r.spec_id.clone(), r.method.clone())).collect();
    series.sort();
    series.dedup();
    for (id, method) in series {
        let part: Vec<ExperimentRecord> = records.iter().filter(|r| r.spec_id == id && r.method == method).cloned().collect();
        let name = format!("rate_{}_{}.dat", file_safe(&id), file_safe(&method));
        written.push(write(&dir.join(name), &rate_table(&part))?);
    }
    Ok(written)
}
