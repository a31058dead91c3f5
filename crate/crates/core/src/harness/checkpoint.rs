//! Actor checkpoints as JSON: the model spec, a flat parameter list, the
//! hash of the producing config, and the episode the parameters came from.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Model, ModelSpec};
use crate::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model_spec: ModelSpec,
    pub config_hash: String,
    pub episode: usize,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(model: &Model, config_hash: &str, episode: usize) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            model_spec: *model.spec(),
            config_hash: config_hash.to_string(),
            episode,
            params: model.params.values.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: Self = serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        if c.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "format version {} (expected {CHECKPOINT_VERSION})",
                c.format_version
            )));
        }
        if c.params.len() != c.model_spec.param_count() {
            return Err(Error::Checkpoint(format!(
                "{} parameters stored for a spec needing {}",
                c.params.len(),
                c.model_spec.param_count()
            )));
        }
        Ok(c)
    }

    /// Rebuilds the model, failing if the stored spec differs from the one
    /// the caller needs.
    pub fn into_model(self, expected: &ModelSpec) -> Result<Model> {
        if self.model_spec != *expected {
            let dims = |s: &ModelSpec| {
                format!(
                    "{:?} {}→{} ({:?})",
                    s.kind, s.input_dim, s.output_dim, s.output_activation
                )
            };
            return Err(Error::Checkpoint(format!(
                "model spec mismatch: checkpoint has {}, expected {}",
                dims(&self.model_spec),
                dims(expected)
            )));
        }
        Model::from_values(self.model_spec, self.params)
    }

    /// A warning line when the checkpoint came from a different config.
    pub fn hash_warning(&self, config_hash: &str) -> Option<String> {
        (self.config_hash != config_hash).then(|| {
            format!(
                "checkpoint config hash {} differs from current config hash {config_hash}",
                self.config_hash
            )
        })
    }
}
