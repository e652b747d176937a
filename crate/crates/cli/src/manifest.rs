//! Run manifest: what ran, with which inputs, and what it wrote.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::artifacts::FileRecord;

pub const MANIFEST_NAME: &str = "manifest.json";
pub const ECHO_NAME: &str = "config.echo";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// An acceptance check embedded in an experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    /// Human-readable bound, e.g. "< 1e-8".
    pub bound: String,
}

impl Check {
    pub fn below(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value < limit,
            value,
            bound: format!("< {limit:e}"),
        }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value > limit,
            value,
            bound: format!("> {limit:e}"),
        }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.to_string(),
            passed: value >= limit,
            value,
            bound: format!(">= {limit:e}"),
        }
    }

    pub fn flag(name: &str, passed: bool, bound: &str) -> Self {
        Self {
            name: name.to_string(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            bound: bound.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Ok,
    ChecksFailed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub experiment: String,
    pub seed: u64,
    /// Canonical TOML of the validated config, defaults filled.
    pub config: String,
    pub started: String,
    pub finished: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    /// Every produced file except the manifest itself.
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Writes to a temporary file and renames it into place.
    pub fn write_atomic(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join(format!(".{MANIFEST_NAME}.tmp"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, dir.join(MANIFEST_NAME))?;
        Ok(())
    }

    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}
