//! JSON run reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// Residual; the check passes when `|value| <= tol`.
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        // NaN residuals fail.
        let pass = value.abs() <= tol;
        Self { name: name.into(), value, tol, pass }
    }

    /// A boolean property as a residual: 0 when it holds, 1 otherwise.
    pub fn flag(name: impl Into<String>, holds: bool) -> Self {
        Self::new(name, if holds { 0.0 } else { 1.0 }, 0.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Option<ExperimentConfig>,
    pub checks: Vec<Check>,
    /// Named scalar results that are not pass/fail (masses, likelihoods, phases).
    pub values: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub error: Option<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &str, config: Option<ExperimentConfig>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            checks: Vec::new(),
            values: BTreeMap::new(),
            notes: Vec::new(),
            outputs: Vec::new(),
            error: None,
            wall_time_s: 0.0,
        }
    }

    pub fn check(&mut self, c: Check) -> &mut Self {
        self.checks.push(c);
        self
    }

    pub fn value(&mut self, name: &str, v: f64) -> &mut Self {
        self.values.insert(name.into(), v);
        self
    }

    pub fn all_pass(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        std::fs::write(path, text + "\n").map_err(|source| Error::Io { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Table(path.to_path_buf(), e.to_string()))
    }
}
