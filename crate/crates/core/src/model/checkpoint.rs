use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hyper::{ModelHyper, SystemActionSpace};
use super::network::DialogueModel;
use super::vocab::Vocabulary;
use crate::autodiff::ParamCheckpoint;
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Self-describing model file: widths, vocabulary, candidate lists, action
/// ordering and every parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub format_version: u32,
    pub hyper: ModelHyper,
    pub vocab: Vocabulary,
    pub candidates: Vec<Vec<String>>,
    pub actions: SystemActionSpace,
    pub params: ParamCheckpoint,
}

impl From<&DialogueModel> for ModelCheckpoint {
    fn from(m: &DialogueModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            hyper: *m.hyper(),
            vocab: m.vocab().clone(),
            candidates: m.candidates().to_vec(),
            actions: m.actions().clone(),
            params: ParamCheckpoint::from(m.params()),
        }
    }
}

impl ModelCheckpoint {
    pub fn into_model(self) -> Result<DialogueModel> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        DialogueModel::from_parts(
            self.hyper,
            self.vocab,
            self.candidates,
            self.actions,
            self.params.into_params()?,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

impl DialogueModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = ModelCheckpoint::from(self).to_json()?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: ModelCheckpoint = serde_json::from_str(&text)?;
        ckpt.into_model()
    }
}
