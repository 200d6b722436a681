use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{BoolnetError, Result};

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved configuration, after command-line overrides.
    pub config: RunConfig,
    pub dataset_provenance: String,
    pub seed: u64,
    pub threads: usize,
    pub code_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    /// Input artifacts, by role.
    pub inputs: BTreeMap<String, PathBuf>,
    /// Written artifacts, by role.
    pub outputs: BTreeMap<String, PathBuf>,
    pub budget_seconds: Option<f64>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

impl RunManifest {
    pub fn new(command: &str, config: RunConfig, seed: u64, threads: usize) -> Self {
        RunManifest {
            command: command.into(),
            config,
            dataset_provenance: String::new(),
            seed,
            threads,
            code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
            started_unix_s: unix_now(),
            finished_unix_s: 0.0,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            budget_seconds: None,
        }
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        self.finished_unix_s = unix_now();
        self.outputs.insert("manifest".into(), path.to_path_buf());
        let text = serde_json::to_string_pretty(self).map_err(|e| BoolnetError::Internal(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| BoolnetError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| BoolnetError::ingestion(path, e.to_string()))
    }
}
