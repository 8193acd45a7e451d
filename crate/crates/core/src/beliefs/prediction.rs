use std::sync::Arc;

use super::frame::{ClassFrame, ClassId};
use super::mass::{belief_to_mass, pignistic, pignistic_entropy, MassFunction, PignisticDist};
use super::sets::{FocalSet, SetBudget};
use crate::error::Result;

/// Complete set-level output for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefPrediction {
    /// Per-set scores in (0, 1), read as belief values.
    pub raw_scores: Vec<f64>,
    pub mass: MassFunction,
    pub pignistic: PignisticDist,
    pub entropy_bits: f64,
    pub predicted_class: ClassId,
    pub top_mass_set: FocalSet,
    /// Scores carried no usable belief and the mass fell back to vacuous.
    pub degenerate: bool,
}

impl BeliefPrediction {
    pub fn from_scores(budget: &Arc<SetBudget>, raw_scores: Vec<f64>) -> Result<Self> {
        let recovery = belief_to_mass(budget, &raw_scores)?;
        Ok(Self::from_mass(raw_scores, recovery.mass, recovery.degenerate))
    }

    pub fn from_mass(raw_scores: Vec<f64>, mass: MassFunction, degenerate: bool) -> Self {
        let pignistic = pignistic(&mass);
        let entropy_bits = pignistic_entropy(&pignistic);
        let predicted_class = pignistic.argmax();
        let top_mass_set = mass.budget().sets()[mass.top_set_index()];
        BeliefPrediction {
            raw_scores,
            mass,
            pignistic,
            entropy_bits,
            predicted_class,
            top_mass_set,
            degenerate,
        }
    }

    pub fn nearest_class_in_top_set(&self, frame: &ClassFrame, true_class: ClassId) -> ClassId {
        nearest_class_in_top_set(frame, self.top_mass_set, true_class)
    }
}

/// Member of `top_set` closest in nominal angle to `true_class`; ties go to
/// the smaller absolute angle, then the lower index.
pub fn nearest_class_in_top_set(frame: &ClassFrame, top_set: FocalSet, true_class: ClassId) -> ClassId {
    let target = frame.angle(true_class);
    top_set
        .members()
        .filter(|c| c.0 < frame.len())
        .min_by(|&a, &b| {
            let (da, db) = ((frame.angle(a) - target).abs(), (frame.angle(b) - target).abs());
            da.total_cmp(&db)
                .then(frame.angle(a).abs().total_cmp(&frame.angle(b).abs()))
                .then(a.cmp(&b))
        })
        .unwrap_or(true_class)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame() -> ClassFrame {
        ClassFrame::seven()
    }

    fn set(names: &[&str]) -> FocalSet {
        FocalSet::from_names(&frame(), names).unwrap()
    }

    #[test]
    fn nearest_class_examples() {
        let f = frame();
        let le = f.id_of("Left-Easy").unwrap();
        assert_eq!(
            nearest_class_in_top_set(&f, set(&["Left-Medium", "Left-Hard"]), le),
            f.id_of("Left-Medium").unwrap()
        );
        let s = f.straight();
        assert_eq!(nearest_class_in_top_set(&f, set(&["Straight"]), s), s);
        let rh = f.id_of("Right-Hard").unwrap();
        assert_eq!(nearest_class_in_top_set(&f, FocalSet::full(7), rh), rh);
    }

    #[test]
    fn nearest_class_tie_prefers_smaller_angle() {
        let f = frame();
        // Straight is equidistant from Left-Easy and Right-Easy.
        let got = nearest_class_in_top_set(&f, set(&["Left-Easy", "Right-Easy"]), f.straight());
        assert_eq!(got, f.id_of("Left-Easy").unwrap());
        let got = nearest_class_in_top_set(&f, set(&["Left-Hard", "Straight"]), f.id_of("Left-Medium").unwrap());
        assert_eq!(got, f.id_of("Left-Hard").unwrap());
    }

    #[test]
    fn categorical_scores_predict_with_zero_entropy() {
        let b = Arc::new(SetBudget::default_seven());
        let c = ClassId(5);
        let pred = BeliefPrediction::from_scores(&b, b.membership_targets(c)).unwrap();
        assert_eq!(pred.predicted_class, c);
        assert_eq!(pred.entropy_bits, 0.0);
        assert_eq!(pred.top_mass_set, FocalSet::singleton(c));
        assert!(!pred.degenerate);
    }
}
