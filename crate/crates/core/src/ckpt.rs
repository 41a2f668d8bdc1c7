//! Checkpoint files: one network per JSON document, version `gmah-ckpt-1`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::nn::{MlpSpec, ParameterSet};

pub const CKPT_VERSION: &str = "gmah-ckpt-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: String,
    pub spec: MlpSpec,
    pub params: ParameterSet,
    /// Free-form extras, e.g. hypernetwork head layout for the mixer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Value>,
}

impl Checkpoint {
    pub fn new(spec: MlpSpec, params: ParameterSet) -> Self {
        Self { version: CKPT_VERSION.into(), spec, params, meta: None }
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = Some(meta);
        self
    }
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let json = serde_json::to_string_pretty(ckpt)
        .map_err(|e| Error::Schema(format!("checkpoint encode: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Dependency(format!("checkpoint {}: {e}", path.display())))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("checkpoint decode: {e}")))?;
    if ckpt.version != CKPT_VERSION {
        return Err(Error::Schema(format!(
            "checkpoint version {} (expected {CKPT_VERSION})",
            ckpt.version
        )));
    }
    for (name, t) in &ckpt.params.entries {
        let n: usize = t.shape.iter().product();
        if n != t.values.len() {
            return Err(Error::Schema(format!("parameter {name} shape/value mismatch")));
        }
        if !t.all_finite() {
            return Err(Error::Numeric(format!("parameter {name} has non-finite values")));
        }
    }
    Ok(ckpt)
}
