//! Binary checkpoints: an 8-byte magic, a little-endian `u32` format
//! version, then the postcard encoding of [`Checkpoint`].

use std::path::Path;

use boolnet_core::train::OptimizerState;
use boolnet_core::{NetworkModel, ThermometerEncoder, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::DataConfig;
use crate::error::{BoolnetError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BOOLNETC";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: NetworkModel,
    pub encoder: ThermometerEncoder,
    pub config: TrainConfig,
    pub optimizer: OptimizerState,
    /// Where the training data came from, so evaluation can reload it.
    pub data: DataConfig,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = CHECKPOINT_MAGIC.to_vec();
        out.extend(CHECKPOINT_VERSION.to_le_bytes());
        postcard::to_extend(self, out).map_err(|e| BoolnetError::Internal(format!("encoding checkpoint: {e}")))
    }

    pub fn from_bytes(bytes: &[u8]) -> std::result::Result<Self, String> {
        if bytes.len() < 12 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err("not a boolnet checkpoint".into());
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(format!("unsupported checkpoint version {version}"));
        }
        let ckpt: Checkpoint = postcard::from_bytes(&bytes[12..]).map_err(|e| format!("corrupt checkpoint: {e}"))?;
        ckpt.model.validate().map_err(|e| e.to_string())?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| BoolnetError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
        Self::from_bytes(&bytes).map_err(|m| BoolnetError::ingestion(path, m))
    }
}

/// True if the file starts with the checkpoint magic.
pub fn is_checkpoint(path: &Path) -> Result<bool> {
    use std::io::Read;
    let mut head = [0u8; 8];
    let mut f = std::fs::File::open(path).map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
    let n = f
        .read(&mut head)
        .map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
    Ok(n == 8 && &head == CHECKPOINT_MAGIC)
}
