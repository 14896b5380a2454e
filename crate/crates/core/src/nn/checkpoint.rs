//! JSON checkpoints of named parameter tensors.
//!
//! ```json
//! {"format": "humemai-qnet", "version": 1, "config": {...},
//!  "tensors": [{"name": "embedding", "shape": [27, 64], "data": [...]}, ...]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NetConfig, NnError, QNet};

pub const CHECKPOINT_FORMAT: &str = "humemai-qnet";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: NetConfig,
    tensors: Vec<NamedTensor>,
}

impl QNet {
    pub fn to_checkpoint_json(&self) -> serde_json::Value {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config().clone(),
            tensors: self
                .named_tensors()
                .into_iter()
                .map(|(name, t)| NamedTensor {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.into_data(),
                })
                .collect(),
        };
        serde_json::to_value(ck).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(value: &serde_json::Value) -> Result<Self, NnError> {
        let ck: Checkpoint = serde_json::from_value(value.clone()).map_err(|e| NnError::Format(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(NnError::Format(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        let template = QNet::from_params(ck.config.clone(), vec![0.0; super::param_count(&ck.config)?])?;
        let mut params = Vec::with_capacity(template.param_count());
        for e in template.entries() {
            let t = ck
                .tensors
                .iter()
                .find(|t| t.name == e.name)
                .ok_or_else(|| NnError::ShapeMismatch(format!("checkpoint lacks tensor {}", e.name)))?;
            if t.shape != e.shape || t.data.len() != e.seg.len {
                return Err(NnError::ShapeMismatch(format!(
                    "tensor {} has shape {:?}, config needs {:?}",
                    e.name, t.shape, e.shape
                )));
            }
            params.extend_from_slice(&t.data);
        }
        if ck.tensors.len() != template.entries().len() {
            return Err(NnError::ShapeMismatch("checkpoint has tensors the config does not define".into()));
        }
        QNet::from_params(ck.config, params)
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        let text = serde_json::to_string(&self.to_checkpoint_json()).map_err(|e| NnError::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = std::fs::read_to_string(path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| NnError::Format(e.to_string()))?;
        Self::from_checkpoint_json(&value)
    }
}
