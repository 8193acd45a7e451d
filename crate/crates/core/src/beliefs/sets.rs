use serde::{Deserialize, Serialize};

use super::frame::{ClassFrame, ClassId};
use crate::error::{Error, Result};

/// Subset of a class frame stored as a bitmask (bit `i` = class `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FocalSet(pub u32);

impl FocalSet {
    pub const EMPTY: FocalSet = FocalSet(0);

    pub fn singleton(class: ClassId) -> Self {
        FocalSet(1 << class.0)
    }

    /// The whole frame, Θ.
    pub fn full(frame_len: usize) -> Self {
        FocalSet(((1u64 << frame_len) - 1) as u32)
    }

    pub fn from_members(members: impl IntoIterator<Item = ClassId>) -> Self {
        FocalSet(members.into_iter().fold(0, |acc, c| acc | (1 << c.0)))
    }

    pub fn contains(self, class: ClassId) -> bool {
        self.0 & (1 << class.0) != 0
    }

    pub fn is_subset_of(self, other: FocalSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn members(self) -> impl Iterator<Item = ClassId> {
        let bits = self.0;
        (0..32).filter(move |i| bits & (1 << i) != 0).map(ClassId)
    }

    pub fn names(self, frame: &ClassFrame) -> Vec<String> {
        self.members().map(|c| frame.name(c).to_string()).collect()
    }

    pub fn from_names<S: AsRef<str>>(frame: &ClassFrame, names: &[S]) -> Result<Self> {
        let mut set = FocalSet::EMPTY;
        for n in names {
            set.0 |= 1 << frame.id_of(n.as_ref())?.0;
        }
        Ok(set)
    }
}

/// The budgeted family of focal sets a random-set classifier scores.
///
/// Always contains every singleton and the full frame. `subset_order` lists
/// budget indices by non-decreasing cardinality, which is a valid processing
/// order for Möbius inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct SetBudget {
    frame_len: usize,
    sets: Vec<FocalSet>,
    subset_order: Vec<usize>,
    proper_subsets: Vec<Vec<usize>>,
}

impl SetBudget {
    pub fn new(frame_len: usize, sets: Vec<FocalSet>) -> Result<Self> {
        if frame_len == 0 || frame_len > 16 {
            return Err(Error::InvalidBudget(format!("unsupported frame size {frame_len}")));
        }
        let full = FocalSet::full(frame_len);
        let mut problems = Vec::new();
        for (i, s) in sets.iter().enumerate() {
            if s.is_empty() {
                problems.push(format!("set #{i} is empty"));
            }
            if !s.is_subset_of(full) {
                problems.push(format!("set #{i} has members outside the frame"));
            }
            if sets[..i].contains(s) {
                problems.push(format!("set #{i} is a duplicate"));
            }
        }
        for c in 0..frame_len {
            if !sets.contains(&FocalSet::singleton(ClassId(c))) {
                problems.push(format!("missing singleton {{{c}}}"));
            }
        }
        if !sets.contains(&full) {
            problems.push("missing the full frame".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::InvalidBudget(problems.join("; ")));
        }

        let mut subset_order: Vec<usize> = (0..sets.len()).collect();
        subset_order.sort_by_key(|&i| sets[i].len());
        let proper_subsets = sets
            .iter()
            .map(|a| {
                (0..sets.len())
                    .filter(|&j| sets[j] != *a && sets[j].is_subset_of(*a))
                    .collect()
            })
            .collect();
        Ok(SetBudget {
            frame_len,
            sets,
            subset_order,
            proper_subsets,
        })
    }

    /// Singletons, within-direction pairs and triples, and Θ (16 sets).
    pub fn default_seven() -> Self {
        let c = |ids: &[usize]| FocalSet::from_members(ids.iter().map(|&i| ClassId(i)));
        // Left-Hard=0, Left-Medium=1, Left-Easy=2, Straight=3, Right-Easy=4, Right-Medium=5, Right-Hard=6
        let mut sets: Vec<FocalSet> = (0..7).map(|i| c(&[i])).collect();
        sets.extend([
            c(&[2, 1]),
            c(&[1, 0]),
            c(&[2, 0]),
            c(&[4, 5]),
            c(&[5, 6]),
            c(&[4, 6]),
            c(&[0, 1, 2]),
            c(&[4, 5, 6]),
            FocalSet::full(7),
        ]);
        SetBudget::new(7, sets).expect("default budget is valid")
    }

    /// Every non-empty subset of the three-class frame.
    pub fn default_three() -> Self {
        let sets = [0b001, 0b010, 0b100, 0b011, 0b110, 0b101, 0b111]
            .into_iter()
            .map(FocalSet)
            .collect();
        SetBudget::new(3, sets).expect("default budget is valid")
    }

    pub fn default_for(frame: &ClassFrame) -> Self {
        match frame.len() {
            7 => Self::default_seven(),
            _ => Self::default_three(),
        }
    }

    pub fn from_names(frame: &ClassFrame, sets: &[Vec<String>]) -> Result<Self> {
        let sets = sets
            .iter()
            .map(|names| FocalSet::from_names(frame, names))
            .collect::<Result<Vec<_>>>()?;
        SetBudget::new(frame.len(), sets)
    }

    pub fn to_names(&self, frame: &ClassFrame) -> Vec<Vec<String>> {
        self.sets.iter().map(|s| s.names(frame)).collect()
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn sets(&self) -> &[FocalSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn index_of(&self, set: FocalSet) -> Option<usize> {
        self.sets.iter().position(|&s| s == set)
    }

    pub fn full_index(&self) -> usize {
        self.index_of(FocalSet::full(self.frame_len))
            .expect("budget always contains the full frame")
    }

    pub(crate) fn subset_order(&self) -> &[usize] {
        &self.subset_order
    }

    pub(crate) fn proper_subsets(&self, index: usize) -> &[usize] {
        &self.proper_subsets[index]
    }

    /// Per-set membership targets for a categorical label: 1 iff `class ∈ A`.
    pub fn membership_targets(&self, class: ClassId) -> Vec<f64> {
        self.sets
            .iter()
            .map(|s| if s.contains(class) { 1.0 } else { 0.0 })
            .collect()
    }
}
