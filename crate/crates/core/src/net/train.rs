use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{backward, NetParams};
use super::{FeatureVector, Model, ModelKind};
use crate::beliefs::{ClassFrame, ClassId, SetBudget};
use crate::error::{Error, Result};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub val_fraction: f64,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            batch_size: 16,
            epochs: 60,
            val_fraction: 0.2,
            hidden: vec![64, 32],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate > 0.0) {
            problems.push("learning_rate must be > 0");
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            problems.push("val_fraction must lie in (0, 1)");
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1");
        }
        if self.epochs == 0 {
            problems.push("epochs must be >= 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            problems.push("momentum must lie in [0, 1)");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub warnings: Vec<String>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_acc\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{:.17e},{:.17e},{:.17e}\n", e.epoch, e.train_loss, e.val_loss, e.val_acc));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub model: Model,
    pub log: TrainLog,
}

/// Stratified (train, validation) index split.
pub fn stratified_split(labels: &[ClassId], n_classes: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    sampling::stratified_holdout(labels, n_classes, val_fraction, seed)
}

/// Splits `data` with `cfg.val_fraction` and trains.
pub fn train(
    kind: ModelKind,
    frame: &ClassFrame,
    budget: &Arc<SetBudget>,
    data: &[(&FeatureVector, ClassId)],
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let labels: Vec<ClassId> = data.iter().map(|d| d.1).collect();
    let (tr, va) = stratified_split(&labels, frame.len(), cfg.val_fraction, sampling::derive_seed(cfg.seed, "val-split", 0));
    let train_set: Vec<_> = tr.iter().map(|&i| data[i]).collect();
    let val_set: Vec<_> = va.iter().map(|&i| data[i]).collect();
    train_with_validation(kind, frame, budget, &train_set, &val_set, cfg)
}

/// Mini-batch SGD with momentum; keeps the epoch with the best validation
/// accuracy (ties: lower validation loss, then earlier epoch).
pub fn train_with_validation(
    kind: ModelKind,
    frame: &ClassFrame,
    budget: &Arc<SetBudget>,
    train_set: &[(&FeatureVector, ClassId)],
    val_set: &[(&FeatureVector, ClassId)],
    cfg: &TrainConfig,
) -> Result<Trained> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyTraining);
    }
    if val_set.is_empty() {
        return Err(Error::EmptyValidation);
    }
    let mut log = TrainLog::default();
    let mut seen = vec![false; frame.len()];
    for &(_, c) in train_set {
        seen[c.0] = true;
    }
    for c in frame.ids().filter(|c| !seen[c.0]) {
        log.warnings.push(format!("class {} absent from training split", frame.name(c)));
    }

    let mut rng = sampling::rng(cfg.seed);
    let mut sizes = vec![train_set[0].0.len()];
    sizes.extend(&cfg.hidden);
    sizes.push(Model::output_width(kind, frame, budget));
    let mut model = Model::new(kind, frame.clone(), budget.clone(), NetParams::random(&sizes, &mut rng))?;
    let mut velocity = NetParams::zeros(&sizes);
    let mut best: Option<(f64, f64, NetParams)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| train_set[i]).collect();
            let (loss, grads) = backward(&model.params, model.head(), &batch)?;
            loss_sum += loss * batch.len() as f64;
            for ((p, v), g) in model
                .params
                .params_mut()
                .zip(velocity.params_mut())
                .zip(grads.params())
            {
                *v = cfg.momentum * *v - cfg.learning_rate * (g + cfg.weight_decay * *p);
                *p += *v;
            }
        }
        if !loss_sum.is_finite() {
            return Err(Error::NonFinite {
                layer: model.params.layers.len() - 1,
                stage: "training loss",
            });
        }
        let (val_loss, val_acc) = evaluate_split(&model, val_set)?;
        log.epochs.push(EpochLog {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
            val_acc,
        });
        let better = match &best {
            None => true,
            Some((acc, loss, _)) => val_acc > *acc || (val_acc == *acc && val_loss < *loss),
        };
        if better {
            best = Some((val_acc, val_loss, model.params.clone()));
            log.best_epoch = epoch;
        }
    }
    if let Some((_, _, params)) = best {
        model.params = params;
    }
    Ok(Trained { model, log })
}

fn evaluate_split(model: &Model, data: &[(&FeatureVector, ClassId)]) -> Result<(f64, f64)> {
    let head = model.head();
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &(x, c) in data {
        loss += head.loss(&model.params, x, c)?;
        if model.predict(x)?.predicted_class == c {
            correct += 1;
        }
    }
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Fraction of samples whose predicted class matches the label.
pub fn accuracy(model: &Model, data: &[(&FeatureVector, ClassId)]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for &(x, c) in data {
        if model.predict(x)?.predicted_class == c {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}
