//! CSV and JSON artifacts written by the commands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A float with 17 significant digits, which round-trips every `f64`.
pub fn real(v: f64) -> String {
    if v == 0.0 {
        // Avoid "-0.0000000000000000e0".
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}

/// Writes rows of already formatted cells. Cells never contain separators,
/// quotes or line breaks, so no quoting is needed; lines end in CRLF.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut csv = Csv { text: String::new() };
        csv.row(header);
        csv
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(c.as_ref());
        }
        self.text.push_str("\r\n");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Row-major nested vector of a matrix, for JSON.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Header fields shared by every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub artifact_version: &'static str,
    pub command: &'static str,
    pub model_path: String,
    pub model_hash: String,
    pub seeds: Seeds,
}

#[derive(Debug, Clone, Serialize)]
pub struct Seeds {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub env_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
}

/// Serializes `header` and `body` into one flat JSON object.
pub fn json_report<B: Serialize>(header: &Provenance, body: &B) -> String {
    let mut obj = serde_json::to_value(header).expect("plain data");
    if let (Value::Object(h), Value::Object(b)) = (&mut obj, serde_json::to_value(body).expect("plain data")) {
        h.extend(b);
    }
    let mut s = serde_json::to_string_pretty(&obj).expect("plain data");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}

/// `x_1,...,x_n`-style column names.
pub fn indexed_columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

/// `H_i_j` column names of a row-major `n × n` matrix.
pub fn matrix_columns(prefix: &str, n: usize) -> Vec<String> {
    let mut cols = Vec::with_capacity(n * n);
    for i in 1..=n {
        for j in 1..=n {
            cols.push(format!("{prefix}_{i}_{j}"));
        }
    }
    cols
}

/// One line of the human-readable summary printed by `verify`.
pub fn status_line(id: &str, passed: Option<bool>, statistic: f64, threshold: f64) -> String {
    let mut s = String::new();
    let tag = match passed {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    let _ = write!(s, "{tag} {id:<11}");
    if passed.is_some() {
        let _ = write!(s, " statistic={statistic:.6e} threshold={threshold:.6e}");
    }
    s
}
