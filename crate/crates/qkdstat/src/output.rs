//! CSV and metadata writers. Floats use Rust's shortest round-trip
//! formatting, which is locale-independent; lines end in `\n`.

use crate::error::{CliError, CliResult};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SWEEP_HEADER: [&str; 13] = [
    "N",
    "family",
    "bernoulli_family",
    "n_opt",
    "mu",
    "nu",
    "p_mu",
    "p_nu",
    "q_x",
    "l",
    "rate",
    "eps_sec",
    "feasible",
];
pub const BBM92_COLUMNS: [&str; 7] = ["N", "family", "n_opt", "l", "rate", "eps_sec", "feasible"];
pub const DECOY_COLUMNS: [&str; 12] = [
    "N",
    "family",
    "bernoulli_family",
    "mu",
    "nu",
    "p_mu",
    "p_nu",
    "q_x",
    "l",
    "rate",
    "eps_sec",
    "feasible",
];
pub const THRESHOLD_COLUMNS: [&str; 6] = ["N", "n", "eps", "p_th", "family", "q_th"];

/// One optimized sweep point. Fields absent for a protocol are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub big_n: u64,
    pub family: &'static str,
    pub bernoulli_family: Option<&'static str>,
    pub n_opt: Option<u64>,
    pub mu: Option<f64>,
    pub nu: Option<f64>,
    pub p_mu: Option<f64>,
    pub p_nu: Option<f64>,
    pub q_x: Option<f64>,
    pub l: u64,
    pub rate: f64,
    pub eps_sec: f64,
    pub feasible: bool,
}

impl SweepRecord {
    /// Value of a header column as text ("" when absent).
    pub fn field(&self, col: &str) -> String {
        let f = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        match col {
            "N" => self.big_n.to_string(),
            "family" => self.family.to_string(),
            "bernoulli_family" => self.bernoulli_family.unwrap_or("").to_string(),
            "n_opt" => self.n_opt.map(|n| n.to_string()).unwrap_or_default(),
            "mu" => f(self.mu),
            "nu" => f(self.nu),
            "p_mu" => f(self.p_mu),
            "p_nu" => f(self.p_nu),
            "q_x" => f(self.q_x),
            "l" => self.l.to_string(),
            "rate" => fmt_f64(self.rate),
            "eps_sec" => fmt_f64(self.eps_sec),
            "feasible" => self.feasible.to_string(),
            _ => String::new(),
        }
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Writes `rows` (already rendered to text) under `header`.
pub fn write_table<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> std::io::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()
}

pub fn sweep_rows(columns: &[&str], records: &[SweepRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| columns.iter().map(|c| r.field(c)).collect())
        .collect()
}

/// Path of the metadata companion of `csv`: `<csv>.meta.json`.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub software: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub protocol: &'a str,
    pub rows: usize,
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn to_json_pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("serializable");
    b.push(b'\n');
    b
}
