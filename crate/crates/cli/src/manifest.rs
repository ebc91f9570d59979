use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::failure::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Seed of the run; absent for entries not driven by a seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    pub wall_seconds: f64,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub verify: bool,
    pub config_hash: String,
    pub config: RunConfig,
    pub entries: Vec<ManifestEntry>,
    /// Files not tied to a single entry.
    pub artifacts: Vec<PathBuf>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, verify: bool, config: &RunConfig) -> Self {
        Self {
            tool: "ocn".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            verify,
            config_hash: config.hash(),
            config: config.clone(),
            entries: Vec::new(),
            artifacts: Vec::new(),
            wall_seconds: 0.0,
        }
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::Config(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("invalid manifest {}: {e}", path.display())))
    }
}
