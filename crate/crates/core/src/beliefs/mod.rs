//! Finite random-set algebra over the curvature frame.
//!
//! Focal sets are bitmasks over a [`ClassFrame`]; a [`SetBudget`] fixes which
//! sets a classifier scores. Masses and beliefs are converted through the
//! subset relation restricted to the budget, and uncertainty is reported as
//! the Shannon entropy (bits) of the pignistic distribution.

mod frame;
mod mass;
mod prediction;
mod sets;

pub use frame::{ClassFrame, ClassId, ClassInfo, Direction, FrameMode, Severity};
pub use mass::{
    belief_to_mass, mass_to_belief, merge_to_3class, pignistic, pignistic_entropy, MassEntry,
    MassFunction, MassRecovery, PignisticDist, ToPignistic, DEGENERATE_TOTAL, SUM_TOLERANCE,
};
pub use prediction::{nearest_class_in_top_set, BeliefPrediction};
pub use sets::{FocalSet, SetBudget};
