use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::UncertainKind;

/// Largest |deviation| the generator accepts.
pub const MAX_COURSE_ANGLE_DEG: f64 = 120.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corruption {
    #[default]
    None,
    Random,
    Fallen,
    Confusing,
}

impl Corruption {
    pub fn uncertain_kind(self) -> Option<UncertainKind> {
        match self {
            Corruption::None => None,
            Corruption::Random => Some(UncertainKind::Random),
            Corruption::Fallen => Some(UncertainKind::Fallen),
            Corruption::Confusing => Some(UncertainKind::Confusing),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub angle_deg: f64,
    pub length_m: f64,
    #[serde(default)]
    pub corruption: Corruption,
}

impl Segment {
    pub fn clean(angle_deg: f64, length_m: f64) -> Self {
        Segment {
            angle_deg,
            length_m,
            corruption: Corruption::None,
        }
    }

    pub fn corrupted(angle_deg: f64, length_m: f64, corruption: Corruption) -> Self {
        Segment {
            angle_deg,
            length_m,
            corruption,
        }
    }
}

/// Ordered list of segments; serialised as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrackCourse {
    pub segments: Vec<Segment>,
}

impl TrackCourse {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let course = TrackCourse { segments };
        course.validate()?;
        Ok(course)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.length_m > 0.0) || !s.length_m.is_finite() {
                return Err(Error::Config(format!("segment {i}: length must be > 0")));
            }
            if !(s.angle_deg.abs() <= MAX_COURSE_ANGLE_DEG) {
                return Err(Error::Config(format!("segment {i}: |angle| must be <= {MAX_COURSE_ANGLE_DEG}")));
            }
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    /// Segment containing `position_m`, clamped to the last one.
    pub fn segment_at(&self, position_m: f64) -> Option<usize> {
        if self.segments.is_empty() {
            return None;
        }
        let mut end = 0.0;
        for (i, s) in self.segments.iter().enumerate() {
            end += s.length_m;
            if position_m < end {
                return Some(i);
            }
        }
        Some(self.segments.len() - 1)
    }

    /// Start position of segment `index`.
    pub fn segment_start(&self, index: usize) -> f64 {
        self.segments[..index].iter().map(|s| s.length_m).sum()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let course: TrackCourse = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        course.validate()?;
        Ok(course)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
