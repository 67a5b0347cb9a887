//! Run manifests written next to every artifact.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fundcast_core::hashing::file_sha256;
use serde::{Deserialize, Serialize};

use crate::config::{Layer, Resolved, RunConfig};
use crate::error::{Classify, CliError};

pub const MANIFEST_FORMAT: &str = "fundcast-manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub step: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub tool_version: String,
    pub command: String,
    pub config_file: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub precedence: String,
    /// Keys set by the file or by flags; everything else is a default.
    pub key_sources: BTreeMap<String, Layer>,
    pub config: RunConfig,
    /// Inputs by role (`texts`, `dataset`, `model`, ...).
    pub inputs: BTreeMap<String, FileHash>,
    pub artifacts: BTreeMap<String, FileHash>,
    pub timings: Vec<Timing>,
    pub summary: serde_json::Value,
}

/// Collects inputs, artifacts and step timings for one command.
pub struct Recorder {
    command: String,
    started: Instant,
    step_start: Instant,
    inputs: BTreeMap<String, FileHash>,
    artifacts: BTreeMap<String, FileHash>,
    timings: Vec<Timing>,
}

fn hash(path: &Path) -> Result<FileHash, CliError> {
    Ok(FileHash { path: path.to_path_buf(), sha256: file_sha256(path).failed(path.display())? })
}

impl Recorder {
    pub fn new(command: &str) -> Self {
        let now = Instant::now();
        Self {
            command: command.into(),
            started: now,
            step_start: now,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            timings: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(role.into(), hash(path)?);
        Ok(())
    }

    pub fn artifact(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.artifacts.insert(role.into(), hash(path)?);
        Ok(())
    }

    /// Close the current step.
    pub fn step(&mut self, name: &str) {
        let now = Instant::now();
        self.timings.push(Timing { step: name.into(), seconds: (now - self.step_start).as_secs_f64() });
        self.step_start = now;
    }

    pub fn finish(mut self, resolved: &Resolved, summary: serde_json::Value) -> Manifest {
        self.timings.push(Timing { step: "total".into(), seconds: self.started.elapsed().as_secs_f64() });
        Manifest {
            format: MANIFEST_FORMAT.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            config_file: resolved.file.clone(),
            overrides: resolved.overrides.clone(),
            precedence: "flags > file > defaults".into(),
            key_sources: resolved.sources.clone(),
            config: resolved.config.clone(),
            inputs: self.inputs,
            artifacts: self.artifacts,
            timings: self.timings,
            summary,
        }
    }
}

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).failed("manifest")?;
        text.push('\n');
        std::fs::write(path, text).failed(path.display())
    }

    pub fn read(path: &Path) -> Result<Manifest, CliError> {
        let text = std::fs::read_to_string(path).invalid(path.display())?;
        let m: Manifest = serde_json::from_str(&text).invalid(path.display())?;
        if m.format != MANIFEST_FORMAT {
            return Err(CliError::Validation(format!("{}: not a run manifest", path.display())));
        }
        Ok(m)
    }
}
