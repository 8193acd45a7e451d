use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::raster::{write_raster_cache, RasterSpec};
use super::scene::{classify_angle, generate_scene, generate_uncertain, ConeScene, SceneLabel, SceneParams, SceneTarget, UncertainKind};
use crate::beliefs::{ClassFrame, ClassId, FrameMode};
use crate::error::{Error, Result};
use crate::net::FeatureVector;
use crate::sampling::{self, apportion};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub mode: FrameMode,
    pub standard_total: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub uncertain_total: usize,
    /// Relative class frequencies in seven-class order (Left-Hard .. Right-Hard).
    pub class_weights: Vec<f64>,
    pub seed: u64,
    pub scene: SceneParams,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            mode: FrameMode::Seven,
            standard_total: 919,
            train: 588,
            val: 147,
            test: 184,
            uncertain_total: 268,
            class_weights: vec![1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0],
            seed: 0,
            scene: SceneParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    Uncertain,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Val, Split::Test, Split::Uncertain];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::Uncertain => "uncertain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub split: Split,
    pub scene: ConeScene,
    /// Label in the dataset's frame; `None` for uncertain scenes.
    pub label: Option<ClassId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub frame: ClassFrame,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub uncertain: usize,
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.val + self.test + self.uncertain
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub mode: FrameMode,
    pub config_hash: String,
    pub counts: SplitCounts,
    /// split → class name → count
    pub class_histogram: BTreeMap<String, BTreeMap<String, usize>>,
    pub uncertain_histogram: BTreeMap<String, usize>,
    /// split → sample ids
    pub ids: BTreeMap<String, Vec<String>>,
}

pub const MANIFEST_FORMAT: &str = "beliefdrive-dataset";

/// Label of a seven-class id in the given frame mode.
pub fn label_in_mode(class7: ClassId, mode: FrameMode) -> ClassId {
    match mode {
        FrameMode::Seven => class7,
        FrameMode::Three => ClassFrame::merge_class(class7),
    }
}

/// Generates the standard and uncertain scenes and assigns splits.
///
/// Class counts follow `class_weights`; every split is stratified by
/// largest-remainder apportionment. Uncertain scenes only ever land in the
/// `Uncertain` split.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    if cfg.class_weights.len() != 7 || cfg.class_weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::Config("class_weights needs 7 non-negative entries".into()));
    }
    if cfg.train + cfg.val + cfg.test != cfg.standard_total {
        return Err(Error::Config(format!(
            "train + val + test = {} but standard_total = {}",
            cfg.train + cfg.val + cfg.test,
            cfg.standard_total
        )));
    }
    let frame7 = ClassFrame::seven();
    let per_class = apportion(cfg.standard_total, &cfg.class_weights);
    let weights: Vec<f64> = per_class.iter().map(|&n| n as f64).collect();
    let test = apportion(cfg.test, &weights);
    let val = apportion(cfg.val, &weights);
    let deficient: Vec<String> = frame7
        .ids()
        .filter(|c| {
            let i = c.0;
            per_class[i] < 3 || test[i] == 0 || val[i] == 0 || per_class[i] <= test[i] + val[i]
        })
        .map(|c| frame7.name(c).to_string())
        .collect();
    if !deficient.is_empty() {
        return Err(Error::Stratification(deficient));
    }

    let frame = ClassFrame::for_mode(cfg.mode);
    let mut samples = Vec::with_capacity(cfg.standard_total + cfg.uncertain_total);
    let mut split_rng = sampling::rng(sampling::derive_seed(cfg.seed, "splits", 0));
    let mut index = 0u64;
    for c in frame7.ids() {
        let mut splits: Vec<Split> = std::iter::repeat_n(Split::Test, test[c.0])
            .chain(std::iter::repeat_n(Split::Val, val[c.0]))
            .chain(std::iter::repeat_n(Split::Train, per_class[c.0] - test[c.0] - val[c.0]))
            .collect();
        splits.shuffle(&mut split_rng);
        for split in splits {
            let scene = generate_scene(SceneTarget::Class(c), &cfg.scene, sampling::derive_seed(cfg.seed, "standard", index));
            samples.push(Sample {
                id: format!("std-{index:05}"),
                split,
                label: Some(label_in_mode(c, cfg.mode)),
                scene,
            });
            index += 1;
        }
    }
    let kinds = apportion(cfg.uncertain_total, &[1.0, 1.0, 1.0]);
    let mut u = 0u64;
    for (kind, n) in UncertainKind::ALL.into_iter().zip(kinds) {
        for _ in 0..n {
            samples.push(Sample {
                id: format!("unc-{u:05}"),
                split: Split::Uncertain,
                scene: generate_uncertain(kind, &cfg.scene, sampling::derive_seed(cfg.seed, "uncertain", u)),
                label: None,
            });
            u += 1;
        }
    }
    Ok(Dataset {
        frame,
        seed: cfg.seed,
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SampleFile {
    id: String,
    split: Split,
    label: String,
    deviation_angle_deg: Option<f64>,
    cones: Vec<super::scene::Cone>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.split == split)
    }

    /// Rasterised features and labels of a labelled split.
    pub fn labeled(&self, split: Split, raster: &RasterSpec) -> (Vec<FeatureVector>, Vec<ClassId>) {
        self.split(split)
            .filter_map(|s| s.label.map(|l| (raster.rasterize(&s.scene), l)))
            .unzip()
    }

    pub fn uncertain_features(&self, raster: &RasterSpec) -> Vec<FeatureVector> {
        self.split(Split::Uncertain).map(|s| raster.rasterize(&s.scene)).collect()
    }

    pub fn label_name(&self, sample: &Sample) -> String {
        match (sample.label, sample.scene.label) {
            (Some(l), _) => self.frame.name(l).to_string(),
            (None, SceneLabel::Uncertain(k)) => format!("uncertain:{}", k.name()),
            (None, SceneLabel::Class(_)) => "unlabeled".to_string(),
        }
    }

    pub fn manifest(&self, config_hash: &str) -> DatasetManifest {
        let mut class_histogram: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut uncertain_histogram = BTreeMap::new();
        let mut ids: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut counts = SplitCounts {
            train: 0,
            val: 0,
            test: 0,
            uncertain: 0,
        };
        for split in Split::ALL {
            ids.insert(split.name().to_string(), Vec::new());
        }
        for split in [Split::Train, Split::Val, Split::Test] {
            class_histogram.insert(split.name().to_string(), self.frame.names().into_iter().map(|n| (n, 0)).collect());
        }
        for s in &self.samples {
            ids.get_mut(s.split.name()).unwrap().push(s.id.clone());
            match s.split {
                Split::Train => counts.train += 1,
                Split::Val => counts.val += 1,
                Split::Test => counts.test += 1,
                Split::Uncertain => counts.uncertain += 1,
            }
            if let Some(l) = s.label {
                *class_histogram
                    .get_mut(s.split.name())
                    .unwrap()
                    .get_mut(self.frame.name(l))
                    .unwrap() += 1;
            } else if let SceneLabel::Uncertain(k) = s.scene.label {
                *uncertain_histogram.entry(k.name().to_string()).or_insert(0) += 1;
            }
        }
        DatasetManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: 1,
            seed: self.seed,
            mode: self.frame.mode(),
            config_hash: config_hash.to_string(),
            counts,
            class_histogram,
            uncertain_histogram,
            ids,
        }
    }

    /// Writes `manifest.json`, `samples/<id>.json` and `raster.bin` under `dir`.
    pub fn write(&self, dir: &Path, raster: &RasterSpec, config_hash: &str) -> Result<DatasetManifest> {
        let samples_dir = dir.join("samples");
        fs::create_dir_all(&samples_dir).map_err(|e| Error::io(&samples_dir, e))?;
        for s in &self.samples {
            let file = SampleFile {
                id: s.id.clone(),
                split: s.split,
                label: self.label_name(s),
                deviation_angle_deg: s.scene.deviation_angle_deg,
                cones: s.scene.cones.clone(),
            };
            let path = samples_dir.join(format!("{}.json", s.id));
            let text = serde_json::to_string(&file).map_err(|e| Error::json(&path, e))?;
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        let manifest = self.manifest(config_hash);
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::json(&path, e))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        let features: Vec<FeatureVector> = self.samples.iter().map(|s| raster.rasterize(&s.scene)).collect();
        write_raster_cache(&dir.join("raster.bin"), raster, &features)?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<(Dataset, DatasetManifest)> {
        let path = dir.join("manifest.json");
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Format {
                path,
                message: format!("unexpected format `{}`", manifest.format),
            });
        }
        let frame = ClassFrame::for_mode(manifest.mode);
        let mut samples = Vec::new();
        for split in Split::ALL {
            for id in manifest.ids.get(split.name()).into_iter().flatten() {
                let path = dir.join("samples").join(format!("{id}.json"));
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let file: SampleFile = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
                let (label, scene_label) = match file.label.strip_prefix("uncertain:") {
                    Some(kind) => (None, SceneLabel::Uncertain(kind.parse()?)),
                    None => {
                        let angle = file.deviation_angle_deg.ok_or_else(|| Error::Format {
                            path: path.clone(),
                            message: "labelled sample without an angle".into(),
                        })?;
                        (Some(frame.id_of(&file.label)?), SceneLabel::Class(classify_angle(angle)))
                    }
                };
                samples.push(Sample {
                    id: file.id,
                    split: file.split,
                    scene: ConeScene {
                        cones: file.cones,
                        deviation_angle_deg: file.deviation_angle_deg,
                        label: scene_label,
                    },
                    label,
                });
            }
        }
        // Restore generation order so in-memory and on-disk datasets agree.
        samples.sort_by(|a, b| a.id.cmp(&b.id));
        Ok((
            Dataset {
                frame,
                seed: manifest.seed,
                samples,
            },
            manifest,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_split_sizes() {
        let ds = build_dataset(&DatasetConfig::default()).unwrap();
        let m = ds.manifest("");
        assert_eq!(m.counts, SplitCounts { train: 588, val: 147, test: 184, uncertain: 268 });
        assert_eq!(m.counts.total(), 1187);
        assert_eq!(m.uncertain_histogram.values().sum::<usize>(), 268);
    }

    #[test]
    fn three_class_mode_preserves_counts() {
        let cfg = DatasetConfig {
            mode: FrameMode::Three,
            ..DatasetConfig::default()
        };
        let m3 = build_dataset(&cfg).unwrap().manifest("");
        let m7 = build_dataset(&DatasetConfig::default()).unwrap().manifest("");
        assert_eq!(m3.counts, m7.counts);
        let left: usize = ["Left-Hard", "Left-Medium", "Left-Easy"]
            .iter()
            .map(|n| m7.class_histogram["train"][*n])
            .sum();
        assert_eq!(m3.class_histogram["train"]["Left"], left);
    }

    #[test]
    fn tiny_datasets_fail_stratification() {
        let cfg = DatasetConfig {
            standard_total: 20,
            train: 14,
            val: 3,
            test: 3,
            ..DatasetConfig::default()
        };
        match build_dataset(&cfg) {
            Err(Error::Stratification(classes)) => assert!(!classes.is_empty()),
            other => panic!("expected stratification error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_split_sizes_are_rejected() {
        let cfg = DatasetConfig {
            train: 500,
            ..DatasetConfig::default()
        };
        assert!(matches!(build_dataset(&cfg), Err(Error::Config(_))));
    }
}
