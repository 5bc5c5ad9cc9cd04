//! Run manifests, CSV tables and the log-log slope post-processor.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::stats::fit_loglog;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Passed,
    /// Finished, but an acceptance assertion failed.
    Failed,
    Error,
}

/// One named check of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    /// Calibrated and measured constants by name.
    pub constants: BTreeMap<String, f64>,
    /// Work counters (lattice points, draws, trees) by stage.
    pub budgets: BTreeMap<String, u128>,
    pub summary: Value,
    pub assertions: Vec<Assertion>,
    pub artifacts: Vec<String>,
    pub error: Option<String>,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            status: RunStatus::Running,
            config: config.clone(),
            constants: BTreeMap::new(),
            budgets: BTreeMap::new(),
            summary: Value::Null,
            assertions: Vec::new(),
            artifacts: Vec::new(),
            error: None,
            wall_time_s: 0.0,
        }
    }

    pub fn assert(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    /// Writes `manifest.json` in `dir` through a temporary file and a rename.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        write_atomic(
            dir,
            "manifest.json",
            &(serde_json::to_string_pretty(self)? + "\n"),
        )
    }
}

pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// A CSV table with a header row; floats use Rust's shortest round-trip form.
#[derive(Clone, Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub enum Cell {
    Int(i128),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}
impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}
impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}
impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(
            row.into_iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Float(v) => format!("{v:?}"),
                    Cell::Text(s) if s.contains([',', '"', '\n']) => {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    }
                    Cell::Text(s) => s,
                })
                .collect(),
        );
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

/// Least-squares slope of `ln value` against `ln L`.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub se: f64,
    /// Two standard errors.
    pub half_width: f64,
    pub used: usize,
    pub excluded: usize,
}

pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(l, v)| l > 0.0 && v > 0.0)
        .collect();
    let excluded = points.len() - kept.len();
    if excluded > 0 {
        log::warn!("{excluded} nonpositive values excluded from the slope fit");
    }
    if kept.len() < 3 {
        return Err(Error::invalid(format!(
            "slope fit needs at least 3 positive values, have {}",
            kept.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = kept.iter().copied().unzip();
    let f = fit_loglog(&x, &y).ok_or_else(|| Error::invalid("degenerate L values"))?;
    Ok(SlopeFit {
        slope: f.slope,
        se: f.slope_se,
        half_width: 2.0 * f.slope_se,
        used: kept.len(),
        excluded,
    })
}

/// Slope fit of one column against the first column of a CSV table.
pub fn fit_slope_csv(text: &str, column: &str) -> Result<SlopeFit> {
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::invalid("empty CSV"))?
        .split(',')
        .map(str::trim)
        .collect();
    let idx = header
        .iter()
        .position(|h| *h == column)
        .ok_or_else(|| Error::invalid(format!("no column {column:?} in {header:?}")))?;
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |j: usize| -> Result<f64> {
            cells
                .get(j)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| Error::invalid(format!("row {}: column {j} is not a number", i + 1)))
        };
        points.push((parse(0)?, parse(idx)?));
    }
    fit_slope(&points)
}
