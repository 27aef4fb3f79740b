use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA;

/// One certificate: a measured value compared against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Non-finite values are written as `null`.
    #[serde(deserialize_with = "nullable")]
    pub value: f64,
    pub tolerance: f64,
    /// Non-blocking checks are reported but do not affect the exit code.
    pub blocking: bool,
}

fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            blocking: true,
        }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value > tolerance,
            value,
            tolerance,
            blocking: true,
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, value: f64) -> Self {
        Self {
            name: name.into(),
            passed,
            value,
            tolerance: 0.0,
            blocking: true,
        }
    }

    pub fn non_blocking(mut self) -> Self {
        self.blocking = false;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl Report {
    pub fn new(command: &str, config_hash: &str, seed: u64, checks: Vec<Check>, details: serde_json::Value) -> Self {
        Self {
            schema: SCHEMA,
            command: command.to_string(),
            config_hash: config_hash.to_string(),
            seed,
            passed: all_pass(&checks),
            checks,
            details,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.blocking && !c.passed)
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed || !c.blocking)
}

/// Result of one CLI invocation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub passed: bool,
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Print failing checks to stderr.
pub fn print_failures(report: &Report) {
    for c in report.failures() {
        eprintln!("FAIL {}: value {:.3e} (tolerance {:.3e})", c.name, c.value, c.tolerance);
    }
}
