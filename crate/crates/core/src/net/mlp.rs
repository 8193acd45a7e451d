use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::FeatureVector;
use crate::beliefs::{BeliefPrediction, ClassId, PignisticDist, SetBudget};
use crate::error::{Error, Result};

/// Guard for every logarithm in the losses.
pub const LOG_EPS: f64 = 1e-12;

/// Fully connected layer. Weights are stored input-major
/// (`weights[i * outputs + o]`) so sparse inputs can skip whole rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn glorot<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
            bias: vec![0.0; outputs],
        }
    }

    fn forward_into(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &a) in input.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (z, &w) in out.iter_mut().zip(row) {
                *z += a * w;
            }
        }
    }
}

/// Weights of a tanh MLP with a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    pub layers: Vec<Dense>,
}

impl NetParams {
    /// Glorot-uniform weights, zero biases. `sizes` = [input, hidden.., output].
    pub fn random<R: Rng>(sizes: &[usize], rng: &mut R) -> Self {
        NetParams {
            layers: sizes.windows(2).map(|w| Dense::glorot(w[0], w[1], rng)).collect(),
        }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        NetParams {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers.first().map_or(0, |l| l.inputs)];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.sizes()[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes().last().unwrap_or(&0)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks that consecutive layers agree and every value is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape(format!("layer {i} storage does not match {}x{}", l.inputs, l.outputs)));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Error::Shape(format!("layer {i} expects {} inputs", l.inputs)));
            }
            if l.weights.iter().chain(&l.bias).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: i, stage: "parameters" });
            }
        }
        Ok(())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }
}

/// Gradients share the parameter layout.
pub type Gradients = NetParams;

/// Per-layer activations kept for the backward pass.
#[derive(Debug, Default)]
pub(crate) struct Activations {
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l` (post-tanh for hidden layers).
    acts: Vec<Vec<f64>>,
}

impl Activations {
    pub(crate) fn logits(&self) -> &[f64] {
        self.acts.last().expect("forward pass ran")
    }
}

pub(crate) fn forward_cached(params: &NetParams, x: &FeatureVector, cache: &mut Activations) -> Result<()> {
    let first = &params.layers[0];
    if x.len() != first.inputs {
        return Err(Error::Shape(format!("feature vector has {} values, network expects {}", x.len(), first.inputs)));
    }
    cache.acts.resize_with(params.layers.len() + 1, Vec::new);
    cache.acts[0].clear();
    cache.acts[0].extend_from_slice(x.values());
    let last = params.layers.len() - 1;
    for (l, layer) in params.layers.iter().enumerate() {
        let (done, rest) = cache.acts.split_at_mut(l + 1);
        let out = &mut rest[0];
        layer.forward_into(&done[l], out);
        if l < last {
            out.iter_mut().for_each(|z| *z = z.tanh());
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: l, stage: "forward" });
        }
    }
    Ok(())
}

/// Raw output-layer values.
pub fn logits(params: &NetParams, x: &FeatureVector) -> Result<Vec<f64>> {
    let mut cache = Activations::default();
    forward_cached(params, x, &mut cache)?;
    Ok(cache.logits().to_vec())
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub fn forward_softmax(params: &NetParams, x: &FeatureVector) -> Result<PignisticDist> {
    Ok(PignisticDist::new_unchecked(softmax(&logits(params, x)?)))
}

/// Sigmoid per-set scores, read as beliefs and pushed through the mass pipeline.
pub fn forward_rsnn(params: &NetParams, budget: &Arc<SetBudget>, x: &FeatureVector) -> Result<BeliefPrediction> {
    if params.output_dim() != budget.len() {
        return Err(Error::ModelMismatch(format!(
            "output width {} but budget has {} sets",
            params.output_dim(),
            budget.len()
        )));
    }
    let scores = logits(params, x)?.into_iter().map(sigmoid).collect();
    BeliefPrediction::from_scores(budget, scores)
}

/// Cross-entropy `-ln p[true]` (nats).
pub fn loss_softmax(pred: &PignisticDist, true_class: ClassId) -> f64 {
    -pred.probs()[true_class.0].max(LOG_EPS).ln()
}

/// Mean per-set binary cross-entropy against membership targets.
pub fn loss_rsnn(raw_scores: &[f64], budget: &SetBudget, true_class: ClassId) -> f64 {
    let targets = budget.membership_targets(true_class);
    let total: f64 = raw_scores
        .iter()
        .zip(&targets)
        .map(|(&s, &t)| -(t * s.max(LOG_EPS).ln() + (1.0 - t) * (1.0 - s).max(LOG_EPS).ln()))
        .sum();
    total / raw_scores.len() as f64
}

/// Which output head a network carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Softmax,
    Rsnn,
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "softmax" | "cnn" => Ok(ModelKind::Softmax),
            "rsnn" | "rs-nn" => Ok(ModelKind::Rsnn),
            other => Err(Error::Config(format!("unknown model kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Softmax => "softmax",
            ModelKind::Rsnn => "rsnn",
        })
    }
}

/// Loss head used by [`backward`].
#[derive(Debug, Clone, Copy)]
pub enum Head<'a> {
    Softmax,
    Rsnn(&'a SetBudget),
}

impl Head<'_> {
    /// Loss for one sample and its gradient w.r.t. the logits.
    fn loss_and_delta(&self, logits: &[f64], class: ClassId) -> (f64, Vec<f64>) {
        match self {
            Head::Softmax => {
                let p = softmax(logits);
                let loss = -p[class.0].max(LOG_EPS).ln();
                let mut delta = p;
                delta[class.0] -= 1.0;
                (loss, delta)
            }
            Head::Rsnn(budget) => {
                let scores: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
                let loss = loss_rsnn(&scores, budget, class);
                let k = scores.len() as f64;
                let delta = scores
                    .iter()
                    .zip(budget.membership_targets(class))
                    .map(|(s, t)| (s - t) / k)
                    .collect();
                (loss, delta)
            }
        }
    }

    pub fn loss(&self, params: &NetParams, x: &FeatureVector, class: ClassId) -> Result<f64> {
        Ok(self.loss_and_delta(&logits(params, x)?, class).0)
    }
}

/// Mean loss over `batch` and its gradient.
pub fn backward(params: &NetParams, head: Head<'_>, batch: &[(&FeatureVector, ClassId)]) -> Result<(f64, Gradients)> {
    let mut grads = NetParams {
        layers: params.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
    };
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut cache = Activations::default();
    let mut total = 0.0;
    for &(x, class) in batch {
        forward_cached(params, x, &mut cache)?;
        let (loss, mut delta) = head.loss_and_delta(cache.logits(), class);
        total += loss;
        delta.iter_mut().for_each(|d| *d *= scale);

        for l in (0..params.layers.len()).rev() {
            let layer = &params.layers[l];
            let input = &cache.acts[l];
            let g = &mut grads.layers[l];
            for (gb, d) in g.bias.iter_mut().zip(&delta) {
                *gb += d;
            }
            for (i, &a) in input.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (gw, d) in row.iter_mut().zip(&delta) {
                    *gw += a * d;
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through the weights, then through tanh of layer l-1.
            let mut next = vec![0.0; layer.inputs];
            for (i, n) in next.iter_mut().enumerate() {
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                let s: f64 = row.iter().zip(&delta).map(|(w, d)| w * d).sum();
                *n = s * (1.0 - input[i] * input[i]);
            }
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l, stage: "backward" });
            }
            delta = next;
        }
    }
    Ok((total * scale, grads))
}

/// Plain gradient step `θ ← θ − lr·g`.
pub fn sgd_step(params: &NetParams, grads: &Gradients, lr: f64) -> NetParams {
    let mut next = params.clone();
    for (p, g) in next.params_mut().zip(grads.params()) {
        *p -= lr * g;
    }
    next
}
