//! Run records and output sinks.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::CliError;

/// Everything needed to re-create an output: tool version, subcommand,
/// resolved flags and seed. Thread count and output location are left out
/// so equal runs produce equal bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub version: &'static str,
    pub subcommand: &'static str,
    pub flags: Value,
    pub seed: Option<u64>,
}

impl RunRecord {
    pub fn new(subcommand: &'static str, flags: &impl Serialize, seed: Option<u64>) -> Result<Self, CliError> {
        Ok(Self {
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            flags: serde_json::to_value(flags)?,
            seed,
        })
    }

    /// Comment block for CSV outputs, without the leading `# `.
    pub fn csv_header(&self) -> Result<String, CliError> {
        Ok(format!(
            "pwspd {} {}\nrun: {}",
            self.version,
            self.subcommand,
            serde_json::to_string(self)?
        ))
    }

    /// JSON document `{"run": ..., <body fields>}`.
    pub fn json_document(&self, body: Value) -> Result<String, CliError> {
        let mut doc = json!({ "run": self });
        if let (Value::Object(map), Value::Object(extra)) = (&mut doc, body) {
            map.extend(extra);
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        Ok(text)
    }
}

/// Chosen format: the flag, else the output extension, else the command default.
pub fn resolve_format(flag: Option<Format>, out: Option<&Path>, default: Format) -> Format {
    if let Some(f) = flag {
        return f;
    }
    match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        Some("csv") => Format::Csv,
        _ => default,
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

/// Dense matrix as CSV rows after a `# ` comment block.
pub fn matrix_csv(header: &str, m: &nalgebra::DMatrix<f64>) -> String {
    let mut out = comment_block(header);
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn comment_block(header: &str) -> String {
    header.lines().map(|l| format!("# {l}\n")).collect()
}

pub fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
