//! Pool-based active learning: seeding, entropy acquisition and per-round
//! retraining from scratch.
//!
//! Rounds are 0-indexed; round 0 is the model trained on the seed pool.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::{ClassFrame, ClassId, SetBudget};
use crate::error::{Error, Result};
use crate::net::{train_with_validation, FeatureVector, Model, ModelKind, TrainConfig};
use crate::sampling;
use crate::track::{Dataset, RasterSpec, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Experiment {
    /// Stratified 10% seed, global top-k entropy.
    One,
    /// Balanced seed, top-k entropy within each class.
    Two,
    /// Balanced seed, per-class cumulative targets growing each round.
    Three,
}

impl TryFrom<u8> for Experiment {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Experiment::One),
            2 => Ok(Experiment::Two),
            3 => Ok(Experiment::Three),
            _ => Err(format!("experiment must be 1, 2 or 3, got {v}")),
        }
    }
}

impl From<Experiment> for u8 {
    fn from(e: Experiment) -> u8 {
        match e {
            Experiment::One => 1,
            Experiment::Two => 2,
            Experiment::Three => 3,
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.parse::<u8>()
            .map_err(|_| Error::Config(format!("unknown experiment `{s}`")))
            .and_then(|v| Experiment::try_from(v).map_err(Error::Config))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ALConfig {
    pub experiment: Experiment,
    pub kind: ModelKind,
    /// Acquisition rounds after round 0.
    pub rounds: usize,
    pub seed: u64,
    /// Experiment 1 seed size as a fraction of the pool.
    pub seed_fraction: f64,
    /// Experiments 2 and 3 seed size per class.
    pub seed_per_class: usize,
    /// Experiment 1 batch as a fraction of the pool.
    pub batch_fraction: f64,
    /// Experiment 2 acquisitions per class per round.
    pub per_class_batch: usize,
    /// Experiment 3 growth of the per-class target per round.
    pub per_class_step: usize,
    /// Filled from the shared training section.
    #[serde(skip)]
    pub train: TrainConfig,
}

impl Default for ALConfig {
    fn default() -> Self {
        ALConfig {
            experiment: Experiment::One,
            kind: ModelKind::Rsnn,
            rounds: 6,
            seed: 0,
            seed_fraction: 0.10,
            seed_per_class: 5,
            batch_fraction: 0.05,
            per_class_batch: 3,
            per_class_step: 5,
            train: TrainConfig::default(),
        }
    }
}

impl ALConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.rounds < 1 {
            bad.push("rounds must be >= 1");
        }
        if !(self.seed_fraction > 0.0 && self.seed_fraction < 1.0) {
            bad.push("seed_fraction must lie in (0, 1)");
        }
        if self.seed_per_class < 1 {
            bad.push("seed_per_class must be >= 1");
        }
        if !(self.batch_fraction > 0.0 && self.batch_fraction <= 1.0) {
            bad.push("batch_fraction must lie in (0, 1]");
        }
        if self.per_class_batch < 1 || self.per_class_step < 1 {
            bad.push("per-class batch sizes must be >= 1");
        }
        if bad.is_empty() {
            self.train.validate()
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }

    /// Experiment 1 batch size for a pool of `pool_len` samples (at least 1).
    pub fn global_batch(&self, pool_len: usize) -> usize {
        ((self.batch_fraction * pool_len as f64).round() as usize).max(1)
    }
}

/// Labelled pool, validation and test data for one experiment.
#[derive(Debug, Clone)]
pub struct ALData {
    pub frame: ClassFrame,
    pub budget: Arc<SetBudget>,
    pub pool_ids: Vec<String>,
    pub pool_x: Vec<FeatureVector>,
    pub pool_y: Vec<ClassId>,
    pub val_x: Vec<FeatureVector>,
    pub val_y: Vec<ClassId>,
    pub test_x: Vec<FeatureVector>,
    pub test_y: Vec<ClassId>,
}

impl ALData {
    /// Pool = train split; the uncertain split is never included.
    pub fn from_dataset(ds: &Dataset, budget: Arc<SetBudget>, raster: &RasterSpec) -> Self {
        let pool: Vec<_> = ds.split(Split::Train).filter(|s| s.label.is_some()).collect();
        let (val_x, val_y) = ds.labeled(Split::Val, raster);
        let (test_x, test_y) = ds.labeled(Split::Test, raster);
        ALData {
            frame: ds.frame.clone(),
            budget,
            pool_ids: pool.iter().map(|s| s.id.clone()).collect(),
            pool_x: pool.iter().map(|s| raster.rasterize(&s.scene)).collect(),
            pool_y: pool.iter().map(|s| s.label.expect("filtered")).collect(),
            val_x,
            val_y,
            test_x,
            test_y,
        }
    }
}

/// Indices into the pool. `labeled` and `unlabeled` are disjoint and
/// together cover the whole pool.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPool {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
}

impl LabelPool {
    pub fn per_class(&self, labels: &[ClassId], n_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; n_classes];
        for &i in &self.labeled {
            counts[labels[i].0] += 1;
        }
        counts
    }

    /// Moves `picked` from unlabeled to labeled.
    pub fn label(&mut self, picked: &[usize]) {
        self.unlabeled.retain(|i| !picked.contains(i));
        self.labeled.extend_from_slice(picked);
        self.labeled.sort_unstable();
    }
}

pub fn seed_pool(labels: &[ClassId], n_classes: usize, cfg: &ALConfig) -> Result<LabelPool> {
    let seed = sampling::derive_seed(cfg.seed, "al-seed", 0);
    match cfg.experiment {
        Experiment::One => {
            let (unlabeled, labeled) = sampling::stratified_holdout(labels, n_classes, cfg.seed_fraction, seed);
            Ok(LabelPool { labeled, unlabeled })
        }
        Experiment::Two | Experiment::Three => {
            let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
            for (i, c) in labels.iter().enumerate() {
                by_class[c.0].push(i);
            }
            let short: Vec<String> = by_class
                .iter()
                .enumerate()
                .filter(|(_, m)| m.len() < cfg.seed_per_class)
                .map(|(c, m)| format!("class {c}: {} < {}", m.len(), cfg.seed_per_class))
                .collect();
            if !short.is_empty() {
                return Err(Error::Stratification(short));
            }
            let mut rng = sampling::rng(seed);
            let mut labeled = Vec::new();
            for members in &mut by_class {
                members.shuffle(&mut rng);
                labeled.extend_from_slice(&members[..cfg.seed_per_class]);
            }
            labeled.sort_unstable();
            let unlabeled = (0..labels.len()).filter(|i| labeled.binary_search(i).is_err()).collect();
            Ok(LabelPool { labeled, unlabeled })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Acquisition {
    pub picked: Vec<usize>,
    pub shortfalls: Vec<String>,
}

/// Selects the samples to label for `round` (>= 1).
///
/// `entropy[i]` is the current model's entropy on pool sample `i`; only
/// unlabeled entries are read. Labels are used only to bucket by class in
/// experiments 2 and 3. Ties go to the smaller sample id.
pub fn acquire(
    round: usize,
    pool: &LabelPool,
    entropy: &[f64],
    ids: &[String],
    labels: &[ClassId],
    n_classes: usize,
    cfg: &ALConfig,
) -> Acquisition {
    let rank = |v: &mut Vec<usize>| {
        v.sort_by(|&a, &b| entropy[b].total_cmp(&entropy[a]).then_with(|| ids[a].cmp(&ids[b])));
    };
    let mut out = Acquisition::default();
    match cfg.experiment {
        Experiment::One => {
            let mut cand = pool.unlabeled.clone();
            rank(&mut cand);
            let k = cfg.global_batch(labels.len());
            if cand.len() < k {
                out.shortfalls.push(format!("round {round}: pool exhausted ({} < {k})", cand.len()));
            }
            cand.truncate(k);
            out.picked = cand;
        }
        Experiment::Two | Experiment::Three => {
            let have = pool.per_class(labels, n_classes);
            for (c, &had) in have.iter().enumerate() {
                let want = match cfg.experiment {
                    Experiment::Two => cfg.per_class_batch,
                    _ => (cfg.seed_per_class + round * cfg.per_class_step).saturating_sub(had),
                };
                let mut cand: Vec<usize> = pool.unlabeled.iter().copied().filter(|&i| labels[i].0 == c).collect();
                rank(&mut cand);
                if cand.len() < want {
                    out.shortfalls.push(format!("round {round}: class {c} short by {}", want - cand.len()));
                }
                cand.truncate(want);
                out.picked.extend(cand);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    pub labeled_total: usize,
    pub labeled_per_class: Vec<usize>,
    /// `None` when training failed this round.
    pub test_acc: Option<f64>,
    pub per_class_acc: Vec<Option<f64>>,
    pub per_class_entropy: Vec<Option<f64>>,
    pub failure: Option<String>,
    pub shortfalls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLog {
    pub experiment: Experiment,
    pub kind: ModelKind,
    pub seed: u64,
    pub classes: Vec<String>,
    pub rounds: Vec<RoundLog>,
}

impl ExperimentLog {
    pub fn final_round(&self) -> &RoundLog {
        self.rounds.last().expect("at least one round")
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let cell = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut out = format!(
            "# seed={} config_hash={config_hash} experiment={} model={}\nround,labeled_total",
            self.seed, self.experiment, self.kind
        );
        for prefix in ["labeled", "acc", "entropy"] {
            if prefix == "acc" {
                out.push_str(",test_acc");
            }
            for c in &self.classes {
                out.push_str(&format!(",{prefix}_{c}"));
            }
        }
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&format!("{},{}", r.round, r.labeled_total));
            for n in &r.labeled_per_class {
                out.push_str(&format!(",{n}"));
            }
            out.push_str(&format!(",{}", cell(r.test_acc)));
            for v in r.per_class_acc.iter().chain(&r.per_class_entropy) {
                out.push_str(&format!(",{}", cell(*v)));
            }
            out.push('\n');
        }
        out
    }
}

/// Overall accuracy, then per-class accuracy and per-class mean entropy (None for absent classes).
pub type SplitScore = (f64, Vec<Option<f64>>, Vec<Option<f64>>);

/// Scores `model` on `(x, y)`.
pub fn score_split(model: &Model, x: &[FeatureVector], y: &[ClassId]) -> Result<SplitScore> {
    let n = model.frame.len();
    let preds = x.par_iter().map(|f| model.predict(f)).collect::<Result<Vec<_>>>()?;
    let (mut hits, mut count, mut ent) = (vec![0usize; n], vec![0usize; n], vec![0.0; n]);
    for (p, c) in preds.iter().zip(y) {
        count[c.0] += 1;
        ent[c.0] += p.entropy_bits;
        hits[c.0] += usize::from(p.predicted_class == *c);
    }
    let acc = hits.iter().sum::<usize>() as f64 / y.len().max(1) as f64;
    let per = |v: &dyn Fn(usize) -> f64| (0..n).map(|c| (count[c] > 0).then(|| v(c) / count[c] as f64)).collect();
    Ok((acc, per(&|c| hits[c] as f64), per(&|c| ent[c])))
}

/// Runs round 0 plus `cfg.rounds` acquisition rounds.
pub fn run_experiment(data: &ALData, cfg: &ALConfig) -> Result<ExperimentLog> {
    cfg.validate()?;
    if data.val_x.is_empty() {
        return Err(Error::EmptyValidation);
    }
    let n = data.frame.len();
    let mut pool = seed_pool(&data.pool_y, n, cfg)?;
    let total = data.pool_y.len();
    let val: Vec<_> = data.val_x.iter().zip(data.val_y.iter().copied()).collect();
    let mut log = ExperimentLog {
        experiment: cfg.experiment,
        kind: cfg.kind,
        seed: cfg.seed,
        classes: data.frame.names(),
        rounds: Vec::new(),
    };
    let mut last_model: Option<Model> = None;
    let mut shortfalls = Vec::new();
    for round in 0..=cfg.rounds {
        if round > 0 {
            let entropy = match &last_model {
                Some(m) => pool_entropy(m, data, &pool)?,
                None => vec![0.0; total],
            };
            let acq = acquire(round, &pool, &entropy, &data.pool_ids, &data.pool_y, n, cfg);
            pool.label(&acq.picked);
            shortfalls = acq.shortfalls;
        }
        debug_assert_eq!(pool.labeled.len() + pool.unlabeled.len(), total);
        let train: Vec<_> = pool.labeled.iter().map(|&i| (&data.pool_x[i], data.pool_y[i])).collect();
        let mut tcfg = cfg.train.clone();
        tcfg.seed = sampling::derive_seed(cfg.seed, "al-train", round as u64);
        let mut entry = RoundLog {
            round,
            labeled_total: pool.labeled.len(),
            labeled_per_class: pool.per_class(&data.pool_y, n),
            test_acc: None,
            per_class_acc: vec![None; n],
            per_class_entropy: vec![None; n],
            failure: None,
            shortfalls: std::mem::take(&mut shortfalls),
        };
        match train_with_validation(cfg.kind, &data.frame, &data.budget, &train, &val, &tcfg) {
            Ok(trained) => {
                let (acc, pca, pce) = score_split(&trained.model, &data.test_x, &data.test_y)?;
                entry.test_acc = Some(acc);
                entry.per_class_acc = pca;
                entry.per_class_entropy = pce;
                last_model = Some(trained.model);
            }
            Err(e) => entry.failure = Some(e.to_string()),
        }
        log.rounds.push(entry);
    }
    Ok(log)
}

fn pool_entropy(model: &Model, data: &ALData, pool: &LabelPool) -> Result<Vec<f64>> {
    let mut entropy = vec![0.0; data.pool_x.len()];
    let scored = pool
        .unlabeled
        .par_iter()
        .map(|&i| model.predict(&data.pool_x[i]).map(|p| (i, p.entropy_bits)))
        .collect::<Result<Vec<_>>>()?;
    for (i, e) in scored {
        entropy[i] = e;
    }
    Ok(entropy)
}

/// Independent seeds run in parallel; results are in seed order.
pub fn run_seeds(data: &ALData, cfg: &ALConfig, seeds: &[u64]) -> Result<Vec<ExperimentLog>> {
    seeds
        .par_iter()
        .map(|&seed| run_experiment(data, &ALConfig { seed, ..cfg.clone() }))
        .collect()
}
