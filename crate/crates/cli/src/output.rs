//! Summaries, tables and the files they are written to.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;

/// One named invariant with the measured value and the bound it was held to.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("<= {limit:e}"),
            passed: value <= limit,
        }
    }

    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("< {limit:e}"),
            passed: value < limit,
        }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("> {limit:e}"),
            passed: value > limit,
        }
    }

    pub fn finite(name: &str, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: "finite".into(),
            passed: value.is_finite(),
        }
    }

    pub fn holds(name: &str, ok: bool) -> Self {
        Self {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            bound: "== 1".into(),
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub subcommand: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub results: serde_json::Value,
    pub config: ExperimentConfig,
}

impl Summary {
    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// Numeric table written as CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Everything one subcommand produces.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub svgs: Vec<(String, String)>,
}

/// Writes CSV and JSON always, SVG when requested. Returns the written paths.
pub fn write_outcome(outcome: &Outcome, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for t in &outcome.tables {
        let p = dir.join(format!("{}.csv", t.name));
        t.write(&p)?;
        written.push(p);
    }
    let p = dir.join(format!("{}.json", outcome.summary.subcommand));
    let mut text = serde_json::to_string_pretty(&outcome.summary).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(&p, text)?;
    written.push(p);
    if formats.contains(&Format::Svg) {
        for (name, svg) in &outcome.svgs {
            let p = dir.join(format!("{name}.svg"));
            fs::write(&p, svg)?;
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("demo", &["h", "ratio"]);
        t.push(vec![0.1, 2.5]);
        t.push(vec![0.05, f64::INFINITY]);
        let p = dir.path().join("demo.csv");
        t.write(&p).unwrap();
        assert_eq!(fs::read_to_string(p).unwrap(), "h,ratio\n0.1,2.5\n0.05,inf\n");
    }

    #[test]
    fn check_bounds() {
        assert!(Check::at_most("x", 1.0, 1.0).passed);
        assert!(!Check::below("x", 1.0, 1.0).passed);
        assert!(!Check::finite("x", f64::NAN).passed);
        assert!(Check::above("x", 2.0, 1.0).passed);
    }
}
