//! Small feed-forward classifier with hand-written reverse-mode gradients.
//!
//! One tanh MLP body feeds either a softmax head (the deterministic
//! baseline) or a random-set head that scores every set in a budget with an
//! independent sigmoid.

mod checkpoint;
mod mlp;
mod train;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::beliefs::{pignistic_entropy, ClassFrame, ClassId, FocalSet, PignisticDist, SetBudget};
use crate::error::{Error, Result};

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use mlp::{
    backward, forward_rsnn, forward_softmax, logits, loss_rsnn, loss_softmax, sgd_step, Dense, Gradients, Head,
    ModelKind, NetParams, LOG_EPS,
};
pub use train::{accuracy, stratified_split, train, train_with_validation, EpochLog, TrainConfig, TrainLog, Trained};

/// Fixed-length network input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("feature vector has non-finite entries".into()));
        }
        Ok(FeatureVector(values))
    }

    /// Skips the finiteness check; the forward pass still catches non-finite activations.
    pub fn from_raw(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Head-agnostic view of a single prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub probs: PignisticDist,
    pub entropy_bits: f64,
    pub predicted_class: ClassId,
    /// Only the random-set head produces a top mass set.
    pub top_mass_set: Option<FocalSet>,
    pub degenerate: bool,
}

/// A network together with the frame and budget it was built for.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: ModelKind,
    pub frame: ClassFrame,
    pub budget: Arc<SetBudget>,
    pub params: NetParams,
}

impl Model {
    pub fn new(kind: ModelKind, frame: ClassFrame, budget: Arc<SetBudget>, params: NetParams) -> Result<Self> {
        params.validate()?;
        if budget.frame_len() != frame.len() {
            return Err(Error::ModelMismatch(format!(
                "budget is over {} classes, frame has {}",
                budget.frame_len(),
                frame.len()
            )));
        }
        let want = Self::output_width(kind, &frame, &budget);
        if params.output_dim() != want {
            return Err(Error::ModelMismatch(format!(
                "{kind} head needs {want} outputs, network has {}",
                params.output_dim()
            )));
        }
        Ok(Model {
            kind,
            frame,
            budget,
            params,
        })
    }

    pub fn output_width(kind: ModelKind, frame: &ClassFrame, budget: &SetBudget) -> usize {
        match kind {
            ModelKind::Softmax => frame.len(),
            ModelKind::Rsnn => budget.len(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim()
    }

    pub fn head(&self) -> Head<'_> {
        match self.kind {
            ModelKind::Softmax => Head::Softmax,
            ModelKind::Rsnn => Head::Rsnn(&self.budget),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        match self.kind {
            ModelKind::Softmax => {
                let probs = forward_softmax(&self.params, x)?;
                Ok(Prediction {
                    entropy_bits: pignistic_entropy(&probs),
                    predicted_class: probs.argmax(),
                    probs,
                    top_mass_set: None,
                    degenerate: false,
                })
            }
            ModelKind::Rsnn => {
                let pred = forward_rsnn(&self.params, &self.budget, x)?;
                Ok(Prediction {
                    probs: pred.pignistic,
                    entropy_bits: pred.entropy_bits,
                    predicted_class: pred.predicted_class,
                    top_mass_set: Some(pred.top_mass_set),
                    degenerate: pred.degenerate,
                })
            }
        }
    }
}
