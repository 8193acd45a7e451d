//! Procedural cone-track scenes labelled by deviation angle, the three
//! corrupted scene families, rasterisation and dataset assembly.

mod dataset;
mod raster;
mod scene;

pub use dataset::{build_dataset, label_in_mode, Dataset, DatasetConfig, DatasetManifest, Sample, Split, SplitCounts};
pub use raster::{read_raster_cache, write_raster_cache, CacheHeader, RasterSpec, CHANNELS};
pub use scene::{
    classify_angle, generate_scene, generate_uncertain, Cone, ConeColor, ConeScene, SceneLabel, SceneParams,
    SceneTarget, UncertainKind, EASY_DEG, HARD_DEG, MEDIUM_DEG,
};
