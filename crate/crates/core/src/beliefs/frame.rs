use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a class inside its [`ClassFrame`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub usize);

impl ClassId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which taxonomy a frame encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameMode {
    /// Direction x severity: three left classes, straight, three right classes.
    Seven,
    /// Directional classes merged into Left / Straight / Right.
    Three,
}

impl FrameMode {
    pub fn from_class_count(n: usize) -> Option<Self> {
        match n {
            7 => Some(FrameMode::Seven),
            3 => Some(FrameMode::Three),
            _ => None,
        }
    }

    pub fn class_count(self) -> usize {
        match self {
            FrameMode::Seven => 7,
            FrameMode::Three => 3,
        }
    }
}

impl fmt::Display for FrameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.class_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Left,
    Straight,
    Right,
}

/// Curvature severity; `Straight` doubles as the zero-severity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Straight,
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    /// Signed nominal deviation angle in degrees; negative is left.
    pub angle_deg: f64,
}

/// Ordered set of mutually exclusive curvature classes.
///
/// Classes are stored in strictly increasing nominal angle, so left classes
/// come first and the index order doubles as a geometric order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFrame {
    mode: FrameMode,
    classes: Vec<ClassInfo>,
}

const SEVEN: [(&str, f64); 7] = [
    ("Left-Hard", -75.0),
    ("Left-Medium", -47.5),
    ("Left-Easy", -25.0),
    ("Straight", 0.0),
    ("Right-Easy", 25.0),
    ("Right-Medium", 47.5),
    ("Right-Hard", 75.0),
];

const THREE: [(&str, f64); 3] = [("Left", -45.0), ("Straight", 0.0), ("Right", 45.0)];

impl ClassFrame {
    pub fn seven() -> Self {
        Self::from_table(FrameMode::Seven, &SEVEN)
    }

    pub fn three() -> Self {
        Self::from_table(FrameMode::Three, &THREE)
    }

    pub fn for_mode(mode: FrameMode) -> Self {
        match mode {
            FrameMode::Seven => Self::seven(),
            FrameMode::Three => Self::three(),
        }
    }

    fn from_table(mode: FrameMode, table: &[(&str, f64)]) -> Self {
        let classes = table
            .iter()
            .map(|&(name, angle_deg)| ClassInfo {
                name: name.to_string(),
                angle_deg,
            })
            .collect();
        ClassFrame { mode, classes }
    }

    pub fn mode(&self) -> FrameMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> {
        (0..self.classes.len()).map(ClassId)
    }

    pub fn name(&self, class: ClassId) -> &str {
        &self.classes[class.0].name
    }

    pub fn angle(&self, class: ClassId) -> f64 {
        self.classes[class.0].angle_deg
    }

    pub fn names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn id_of(&self, name: &str) -> Result<ClassId> {
        self.classes
            .iter()
            .position(|c| c.name.eq_ignore_ascii_case(name))
            .map(ClassId)
            .ok_or_else(|| Error::UnknownClass(name.to_string()))
    }

    pub fn straight(&self) -> ClassId {
        self.id_of("Straight").expect("every frame has a Straight class")
    }

    /// Maximum pignistic entropy over this frame, in bits.
    pub fn max_entropy_bits(&self) -> f64 {
        (self.len() as f64).log2()
    }

    pub fn direction(&self, class: ClassId) -> Direction {
        let a = self.angle(class);
        if a < 0.0 {
            Direction::Left
        } else if a > 0.0 {
            Direction::Right
        } else {
            Direction::Straight
        }
    }

    /// Severity of a class. Merged directional classes report `Medium`.
    pub fn severity(&self, class: ClassId) -> Severity {
        match self.mode {
            FrameMode::Three => match self.direction(class) {
                Direction::Straight => Severity::Straight,
                _ => Severity::Medium,
            },
            FrameMode::Seven => match class.0 {
                3 => Severity::Straight,
                2 | 4 => Severity::Easy,
                1 | 5 => Severity::Medium,
                _ => Severity::Hard,
            },
        }
    }

    /// Seven-class id for a direction/severity pair.
    pub fn seven_class(direction: Direction, severity: Severity) -> ClassId {
        let offset = match severity {
            Severity::Straight => return ClassId(3),
            Severity::Easy => 1,
            Severity::Medium => 2,
            Severity::Hard => 3,
        };
        match direction {
            Direction::Left => ClassId(3 - offset),
            Direction::Right => ClassId(3 + offset),
            Direction::Straight => ClassId(3),
        }
    }

    /// Maps a seven-class id onto the merged three-class frame.
    pub fn merge_class(class7: ClassId) -> ClassId {
        match class7.0 {
            0..=2 => ClassId(0),
            3 => ClassId(1),
            _ => ClassId(2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_strictly_monotone_in_angle() {
        for frame in [ClassFrame::seven(), ClassFrame::three()] {
            let angles: Vec<f64> = frame.classes().iter().map(|c| c.angle_deg).collect();
            assert!(angles.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(ClassFrame::seven().len(), 7);
        assert_eq!(ClassFrame::three().len(), 3);
    }

    #[test]
    fn seven_class_lookup_round_trips() {
        let frame = ClassFrame::seven();
        for id in frame.ids() {
            let c = ClassFrame::seven_class(frame.direction(id), frame.severity(id));
            assert_eq!(c, id);
        }
        assert_eq!(frame.id_of("left-easy").unwrap(), ClassId(2));
        assert!(frame.id_of("Left-Sideways").is_err());
    }

    #[test]
    fn merge_groups_directions() {
        let merged: Vec<usize> = (0..7).map(|i| ClassFrame::merge_class(ClassId(i)).0).collect();
        assert_eq!(merged, vec![0, 0, 0, 1, 2, 2, 2]);
    }
}
