use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::mlp::{ModelKind, NetParams};
use super::train::TrainConfig;
use super::Model;
use crate::beliefs::{ClassFrame, FrameMode, SetBudget};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "beliefdrive-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// On-disk model container (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub frame: FrameMode,
    pub classes: Vec<String>,
    pub budget: Vec<Vec<String>>,
    pub layer_sizes: Vec<usize>,
    pub params: NetParams,
    pub train_config: TrainConfig,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn from_model(model: &Model, train_config: &TrainConfig, config_hash: &str) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            kind: model.kind,
            frame: model.frame.mode(),
            classes: model.frame.names(),
            budget: model.budget.to_names(&model.frame),
            layer_sizes: model.params.sizes(),
            params: model.params.clone(),
            train_config: train_config.clone(),
            config_hash: config_hash.to_string(),
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::ModelMismatch(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let frame = ClassFrame::for_mode(self.frame);
        if frame.names() != self.classes {
            return Err(Error::ModelMismatch("class list does not match the frame".into()));
        }
        if self.params.sizes() != self.layer_sizes {
            return Err(Error::ModelMismatch("layer sizes do not match the stored weights".into()));
        }
        let budget = Arc::new(SetBudget::from_names(&frame, &self.budget)?);
        Model::new(self.kind, frame, budget, self.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling;

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let frame = ClassFrame::seven();
        let budget = Arc::new(SetBudget::default_seven());
        let params = NetParams::random(&[6, 5, 16], &mut sampling::rng(9));
        let model = Model::new(ModelKind::Rsnn, frame, budget, params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        Checkpoint::from_model(&model, &TrainConfig::default(), "abc").save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap().into_model().unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn tampered_shapes_are_rejected() {
        let frame = ClassFrame::three();
        let budget = Arc::new(SetBudget::default_three());
        let model = Model::new(ModelKind::Softmax, frame, budget, NetParams::zeros(&[4, 3])).unwrap();
        let mut ck = Checkpoint::from_model(&model, &TrainConfig::default(), "");
        ck.layer_sizes = vec![4, 7];
        assert!(ck.into_model().is_err());
    }
}
