//! CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a CSV layout or the summary schema changes.
pub const ARTIFACT_VERSION: u32 = 1;

/// A plot-ready table. Cells are rendered when pushed so the text is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Csv {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// One comment line (tool, artifact version, config hash), the column
    /// names, then the rows. No timestamps, so equal inputs give equal bytes.
    pub fn render(&self, config_hash: &str) -> String {
        let mut out = format!(
            "# dlgibbs {TOOL_VERSION} artifact={}/v{ARTIFACT_VERSION} config_sha256={config_hash}\n",
            self.name
        );
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip form in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn int(x: usize) -> String {
    x.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub check: String,
    pub value: f64,
    pub limit: f64,
}

/// Collects bound checks as they are made.
#[derive(Debug, Clone, Default)]
pub struct Checks {
    pub violations: Vec<Violation>,
}

impl Checks {
    /// Records a violation unless `value ≤ limit`.
    pub fn at_most(&mut self, check: impl Into<String>, value: f64, limit: f64) {
        if !(value <= limit) {
            self.violations.push(Violation { check: check.into(), value, limit });
        }
    }

    pub fn at_least(&mut self, check: impl Into<String>, value: f64, limit: f64) {
        if !(value >= limit) {
            self.violations.push(Violation { check: check.into(), value, limit });
        }
    }

    pub fn equal(&mut self, check: impl Into<String>, value: usize, expected: usize) {
        if value != expected {
            self.violations.push(Violation { check: check.into(), value: value as f64, limit: expected as f64 });
        }
    }
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| CliError::Io { path: path.display().to_string(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}
