use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scene::{ConeColor, ConeScene};
use crate::error::{Error, Result};
use crate::net::FeatureVector;

/// Bird's-eye occupancy grid in front of the vehicle.
///
/// Rows run along x (forward) from 0 to `extent_x_m`, columns along y from
/// `-extent_y_m/2` to `+extent_y_m/2`. Channels: blue, yellow, fallen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RasterSpec {
    pub rows: usize,
    pub cols: usize,
    pub extent_x_m: f64,
    pub extent_y_m: f64,
    /// Spread each cone bilinearly over its four nearest cells.
    pub bilinear: bool,
}

pub const CHANNELS: usize = 3;

impl Default for RasterSpec {
    fn default() -> Self {
        RasterSpec {
            rows: 32,
            cols: 32,
            extent_x_m: 20.0,
            extent_y_m: 20.0,
            bilinear: true,
        }
    }
}

impl RasterSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols * CHANNELS
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn add(&self, grid: &mut [f64], channel: usize, r: isize, c: isize, w: f64) {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols || w == 0.0 {
            return;
        }
        let i = channel * self.rows * self.cols + r as usize * self.cols + c as usize;
        grid[i] = (grid[i] + w).min(1.0);
    }

    /// Pure function of the scene.
    pub fn rasterize(&self, scene: &ConeScene) -> FeatureVector {
        let mut grid = vec![0.0; self.len()];
        let cell_x = self.extent_x_m / self.rows as f64;
        let cell_y = self.extent_y_m / self.cols as f64;
        for cone in &scene.cones {
            let channel = if cone.fallen {
                2
            } else {
                match cone.color {
                    ConeColor::Blue => 0,
                    ConeColor::Yellow => 1,
                    ConeColor::SmallOrange | ConeColor::LargeOrange => continue,
                }
            };
            let fr = cone.x / cell_x;
            let fc = (cone.y + self.extent_y_m / 2.0) / cell_y;
            if self.bilinear {
                // Cell centres sit at integer + 0.5.
                let (gr, gc) = (fr - 0.5, fc - 0.5);
                let (r0, c0) = (gr.floor(), gc.floor());
                let (tr, tc) = (gr - r0, gc - c0);
                let (r0, c0) = (r0 as isize, c0 as isize);
                self.add(&mut grid, channel, r0, c0, (1.0 - tr) * (1.0 - tc));
                self.add(&mut grid, channel, r0 + 1, c0, tr * (1.0 - tc));
                self.add(&mut grid, channel, r0, c0 + 1, (1.0 - tr) * tc);
                self.add(&mut grid, channel, r0 + 1, c0 + 1, tr * tc);
            } else {
                self.add(&mut grid, channel, fr.floor() as isize, fc.floor() as isize, 1.0);
            }
        }
        FeatureVector::from_raw(grid)
    }
}

const MAGIC: &[u8; 8] = b"BDRASTER";
const CACHE_VERSION: u32 = 1;

/// Writes rasters as `MAGIC, version, rows, cols, channels, count` (u32 LE)
/// followed by `count * rows * cols * channels` f32 LE values.
pub fn write_raster_cache(path: &Path, spec: &RasterSpec, features: &[FeatureVector]) -> Result<()> {
    let mut buf = Vec::with_capacity(28 + features.len() * spec.len() * 4);
    buf.extend_from_slice(MAGIC);
    for v in [CACHE_VERSION, spec.rows as u32, spec.cols as u32, CHANNELS as u32, features.len() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for f in features {
        if f.len() != spec.len() {
            return Err(Error::Shape(format!("raster has {} values, expected {}", f.len(), spec.len())));
        }
        for &v in f.values() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Header of a raster cache: (rows, cols, channels, count).
pub type CacheHeader = (usize, usize, usize, usize);

pub fn read_raster_cache(path: &Path) -> Result<(CacheHeader, Vec<FeatureVector>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |message: &str| Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    if bytes.len() < 28 || &bytes[..8] != MAGIC {
        return Err(bad("not a raster cache"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    if word(0) != CACHE_VERSION as usize {
        return Err(bad("unsupported raster cache version"));
    }
    let (rows, cols, channels, count) = (word(1), word(2), word(3), word(4));
    let per = rows * cols * channels;
    if bytes.len() != 28 + count * per * 4 {
        return Err(bad("truncated raster cache"));
    }
    let features = bytes[28..]
        .chunks_exact(per * 4)
        .map(|rec| {
            FeatureVector::from_raw(
                rec.chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
                    .collect(),
            )
        })
        .collect();
    Ok(((rows, cols, channels, count), features))
}
