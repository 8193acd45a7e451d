//! Test-set metrics: accuracy, paired count / mean-entropy confusion
//! matrices, entropy histograms and misclassification records.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beliefs::{nearest_class_in_top_set, ClassId, Direction};
use crate::error::{Error, Result};
use crate::net::{FeatureVector, Model, ModelKind};

/// Records above this entropy are flagged as high uncertainty.
pub const HIGH_UNCERTAINTY_BITS: f64 = 2.0;
pub const HISTOGRAM_BINS: usize = 20;
pub const REPORT_FORMAT: &str = "beliefdrive-eval";
pub const REPORT_VERSION: u32 = 1;

/// Equal-width bins over `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize, values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for v in values {
            let b = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Misclassification {
    pub sample_id: String,
    pub true_class: String,
    pub predicted_class: String,
    /// Member of the top mass set closest in angle to the truth; the
    /// predicted class for heads without sets.
    pub nearest_in_top_set: String,
    pub true_angle_deg: f64,
    pub nearest_angle_deg: f64,
    pub entropy_bits: f64,
    pub high_uncertainty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub classes: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
    /// `[true][predicted]`.
    pub confusion_counts: Vec<Vec<usize>>,
    /// Mean entropy per cell; `None` exactly where the count is zero.
    pub confusion_entropy: Vec<Vec<Option<f64>>>,
    pub mean_entropy_regular: f64,
    pub mean_entropy_uncertain: Option<f64>,
    pub histogram_regular: Histogram,
    pub histogram_uncertain: Histogram,
    pub misclassifications: Vec<Misclassification>,
}

/// Labelled test samples plus the unlabelled uncertain split.
pub struct EvalInput<'a> {
    pub test_ids: &'a [String],
    pub test_x: &'a [FeatureVector],
    pub test_y: &'a [ClassId],
    pub uncertain_x: &'a [FeatureVector],
}

pub fn evaluate(model: &Model, input: &EvalInput<'_>, seed: u64, config_hash: &str) -> Result<EvalReport> {
    if input.test_x.is_empty() {
        return Err(Error::Config("test split is empty".into()));
    }
    if input.test_x.len() != input.test_y.len() || input.test_ids.len() != input.test_y.len() {
        return Err(Error::Shape("test ids, features and labels differ in length".into()));
    }
    let frame = &model.frame;
    let n = frame.len();
    let preds = input.test_x.par_iter().map(|x| model.predict(x)).collect::<Result<Vec<_>>>()?;
    let unc = input
        .uncertain_x
        .par_iter()
        .map(|x| model.predict(x).map(|p| p.entropy_bits))
        .collect::<Result<Vec<_>>>()?;

    let mut counts = vec![vec![0usize; n]; n];
    let mut ent_sum = vec![vec![0.0; n]; n];
    let mut mis = Vec::new();
    for ((p, &t), id) in preds.iter().zip(input.test_y).zip(input.test_ids) {
        let j = p.predicted_class;
        counts[t.0][j.0] += 1;
        ent_sum[t.0][j.0] += p.entropy_bits;
        if j != t {
            let nearest = match p.top_mass_set {
                Some(set) => nearest_class_in_top_set(frame, set, t),
                None => j,
            };
            mis.push(Misclassification {
                sample_id: id.clone(),
                true_class: frame.name(t).to_string(),
                predicted_class: frame.name(j).to_string(),
                nearest_in_top_set: frame.name(nearest).to_string(),
                true_angle_deg: frame.angle(t),
                nearest_angle_deg: frame.angle(nearest),
                entropy_bits: p.entropy_bits,
                high_uncertainty: p.entropy_bits > HIGH_UNCERTAINTY_BITS,
            });
        }
    }
    let class_counts: Vec<usize> = counts.iter().map(|r| r.iter().sum()).collect();
    let correct: usize = (0..n).map(|i| counts[i][i]).sum();
    let regular: Vec<f64> = preds.iter().map(|p| p.entropy_bits).collect();
    let hi = frame.max_entropy_bits();
    Ok(EvalReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        kind: model.kind,
        classes: frame.names(),
        seed,
        config_hash: config_hash.to_string(),
        accuracy: correct as f64 / input.test_y.len() as f64,
        per_class_accuracy: (0..n)
            .map(|i| (class_counts[i] > 0).then(|| counts[i][i] as f64 / class_counts[i] as f64))
            .collect(),
        confusion_entropy: (0..n)
            .map(|i| (0..n).map(|j| (counts[i][j] > 0).then(|| ent_sum[i][j] / counts[i][j] as f64)).collect())
            .collect(),
        confusion_counts: counts,
        class_counts,
        mean_entropy_regular: mean(&regular).expect("test split is non-empty"),
        mean_entropy_uncertain: mean(&unc),
        histogram_regular: Histogram::new(0.0, hi, HISTOGRAM_BINS, regular.iter().copied()),
        histogram_uncertain: Histogram::new(0.0, hi, HISTOGRAM_BINS, unc.iter().copied()),
        misclassifications: mis,
    })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Misclassifications sorted by descending entropy, ties by sample id.
pub fn misclassification_analysis(report: &EvalReport) -> Vec<Misclassification> {
    let mut recs = report.misclassifications.clone();
    recs.sort_by(|a, b| b.entropy_bits.total_cmp(&a.entropy_bits).then_with(|| a.sample_id.cmp(&b.sample_id)));
    recs
}

/// Misclassified counts (within one turning direction, across left/right).
/// Confusions involving a straight class belong to neither.
pub fn direction_confusion(report: &EvalReport, directions: &[Direction]) -> (usize, usize) {
    let (mut within, mut across) = (0, 0);
    for (i, row) in report.confusion_counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if i == j || directions[i] == Direction::Straight || directions[j] == Direction::Straight {
                continue;
            }
            if directions[i] == directions[j] {
                within += c;
            } else {
                across += c;
            }
        }
    }
    (within, across)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        let mean = mean(values)?;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanStd { mean, std, n })
    }
}

impl std::fmt::Display for MeanStd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

/// Seed-level aggregate of several reports from the same configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedAggregate {
    pub kind: ModelKind,
    pub classes: Vec<String>,
    pub seeds: Vec<u64>,
    pub accuracy: MeanStd,
    pub per_class_accuracy: Vec<Option<MeanStd>>,
    pub mean_entropy_regular: MeanStd,
    pub mean_entropy_uncertain: Option<MeanStd>,
}

pub fn aggregate_seeds(reports: &[EvalReport]) -> Result<SeedAggregate> {
    let first = reports.first().ok_or_else(|| Error::Config("no reports to aggregate".into()))?;
    if reports.iter().any(|r| r.classes != first.classes || r.kind != first.kind) {
        return Err(Error::ModelMismatch("reports disagree on model kind or classes".into()));
    }
    let col = |f: &dyn Fn(&EvalReport) -> Option<f64>| -> Option<MeanStd> {
        let v: Option<Vec<f64>> = reports.iter().map(f).collect();
        v.and_then(|v| MeanStd::of(&v))
    };
    Ok(SeedAggregate {
        kind: first.kind,
        classes: first.classes.clone(),
        seeds: reports.iter().map(|r| r.seed).collect(),
        accuracy: col(&|r| Some(r.accuracy)).expect("non-empty"),
        per_class_accuracy: (0..first.classes.len()).map(|c| col(&|r| r.per_class_accuracy[c])).collect(),
        mean_entropy_regular: col(&|r| Some(r.mean_entropy_regular)).expect("non-empty"),
        mean_entropy_uncertain: col(&|r| r.mean_entropy_uncertain),
    })
}

impl EvalReport {
    /// Confusion counts and mean entropies as CSV, one row per cell.
    pub fn confusion_csv(&self) -> String {
        let mut out = format!(
            "# seed={} config_hash={}\ntrue_class,predicted_class,count,mean_entropy_bits\n",
            self.seed, self.config_hash
        );
        for (i, row) in self.confusion_counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let e = self.confusion_entropy[i][j].map_or(String::new(), |e| e.to_string());
                out.push_str(&format!("{},{},{c},{e}\n", self.classes[i], self.classes[j]));
            }
        }
        out
    }

    pub fn misclassification_csv(&self) -> String {
        let mut out = format!(
            "# seed={} config_hash={}\nsample_id,true_class,predicted_class,nearest_in_top_set,entropy_bits,high_uncertainty\n",
            self.seed, self.config_hash
        );
        for m in misclassification_analysis(self) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.sample_id,
                m.true_class,
                m.predicted_class,
                m.nearest_in_top_set,
                m.entropy_bits,
                u8::from(m.high_uncertainty)
            ));
        }
        out
    }
}
