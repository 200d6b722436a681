//! TOML run configuration.
//!
//! ```toml
//! [train]
//! layer_widths = [1000, 1000, 1000]
//! tau = 10.0
//!
//! [data]
//! dataset = "mnist"
//! path = "mnist-10k"
//!
//! [prune]
//! passes = ["trivial", "logic-equiv", "similarity"]
//! ```
//!
//! Every section and key is optional. Unknown keys are collected and
//! reported together.

use std::path::{Path, PathBuf};

use boolnet_core::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{BoolnetError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Mnist,
    Cifar10,
    SynthParity,
    SynthVote,
    SynthCircuit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    /// Directory of the dataset files; relative paths not found from the
    /// working directory are resolved under `$BOOLNET_DATA_DIR`.
    pub path: Option<PathBuf>,
    /// Seed of the train/validation/test assignment. Kept apart from the
    /// training seed so every run sees the same split.
    pub split_seed: u64,
    pub val_size: usize,
    /// Test fraction for sources that ship without a test split.
    pub test_fraction: f64,
    /// Synthetic tasks only.
    pub features: usize,
    pub samples: usize,
    pub parity_bits: usize,
    pub teacher_layers: usize,
    pub teacher_width: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dataset: DatasetKind::Mnist,
            path: None,
            split_seed: 0,
            val_size: crate::datasets::DEFAULT_VAL_SIZE,
            test_fraction: 0.2,
            features: 8,
            samples: 2000,
            parity_bits: 2,
            teacher_layers: 2,
            teacher_width: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    /// Pass names, applied in order.
    pub passes: Vec<String>,
    pub greedy_threshold: f64,
    pub similarity_c: f64,
    /// Split whose activations drive the data-driven passes.
    pub profile_split: String,
    /// Split on which accuracy before/after each pass is reported.
    pub eval_split: String,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            passes: vec!["trivial".into(), "logic-equiv".into()],
            greedy_threshold: 0.95,
            similarity_c: 0.95,
            profile_split: "train".into(),
            eval_split: "test".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: DataConfig,
    pub prune: PruneConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        let mut unknown = Vec::new();
        let cfg: RunConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
            .map_err(|e| BoolnetError::Config(e.to_string()))?;
        if !unknown.is_empty() {
            return Err(BoolnetError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        cfg.train.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            BoolnetError::Config(m) => BoolnetError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| BoolnetError::Internal(e.to_string()))
    }
}
