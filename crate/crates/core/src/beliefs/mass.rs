use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::frame::{ClassFrame, ClassId};
use super::sets::{FocalSet, SetBudget};
use crate::error::{Error, Result};

/// Tolerance on `Σ m = 1` and `Σ BetP = 1`.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Möbius outputs at or above this are treated as exact zeros, not clamped.
const ROUNDOFF_FLOOR: f64 = -1e-12;

/// Post-clamp mass totals below this are treated as an all-zero belief.
pub const DEGENERATE_TOTAL: f64 = 1e-6;

/// Normalized mass assignment over a [`SetBudget`].
#[derive(Debug, Clone, PartialEq)]
pub struct MassFunction {
    budget: Arc<SetBudget>,
    mass: Vec<f64>,
}

impl MassFunction {
    pub fn new(budget: Arc<SetBudget>, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != budget.len() {
            return Err(Error::InvalidMass(format!(
                "{} entries for a budget of {} sets",
                mass.len(),
                budget.len()
            )));
        }
        if let Some(bad) = mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidMass(format!("entry {bad} is negative or non-finite")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidMass(format!("entries sum to {total}")));
        }
        Ok(MassFunction { budget, mass })
    }

    /// All mass on Θ.
    pub fn vacuous(budget: Arc<SetBudget>) -> Self {
        let mut mass = vec![0.0; budget.len()];
        mass[budget.full_index()] = 1.0;
        MassFunction { budget, mass }
    }

    /// Builds a mass function from `(set, mass)` pairs; unlisted budget sets get zero.
    pub fn from_pairs(budget: Arc<SetBudget>, pairs: &[(FocalSet, f64)]) -> Result<Self> {
        let mut mass = vec![0.0; budget.len()];
        for &(set, m) in pairs {
            let i = budget
                .index_of(set)
                .ok_or_else(|| Error::InvalidMass(format!("set {:#b} is not in the budget", set.0)))?;
            mass[i] += m;
        }
        MassFunction::new(budget, mass)
    }

    pub fn budget(&self) -> &Arc<SetBudget> {
        &self.budget
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_of(&self, set: FocalSet) -> f64 {
        self.budget.index_of(set).map_or(0.0, |i| self.mass[i])
    }

    /// `Bel(A)` for every budget set, in budget order.
    pub fn beliefs(&self) -> Vec<f64> {
        self.budget
            .sets()
            .iter()
            .map(|&a| mass_to_belief(self, a))
            .collect()
    }

    /// Budget index of the largest mass; ties go to the smaller set, then the lower index.
    pub fn top_set_index(&self) -> usize {
        let sets = self.budget.sets();
        (0..self.mass.len())
            .min_by(|&i, &j| {
                self.mass[j]
                    .total_cmp(&self.mass[i])
                    .then(sets[i].len().cmp(&sets[j].len()))
                    .then(i.cmp(&j))
            })
            .expect("budget is non-empty")
    }

    pub fn to_entries(&self, frame: &ClassFrame) -> Vec<MassEntry> {
        self.budget
            .sets()
            .iter()
            .zip(&self.mass)
            .map(|(s, &mass)| MassEntry {
                set: s.names(frame),
                mass,
            })
            .collect()
    }

    pub fn from_entries(budget: Arc<SetBudget>, frame: &ClassFrame, entries: &[MassEntry]) -> Result<Self> {
        let pairs = entries
            .iter()
            .map(|e| Ok((FocalSet::from_names(frame, &e.set)?, e.mass)))
            .collect::<Result<Vec<_>>>()?;
        MassFunction::from_pairs(budget, &pairs)
    }
}

/// JSON form of one focal element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassEntry {
    pub set: Vec<String>,
    pub mass: f64,
}

/// `Bel(A) = Σ_{B ⊆ A} m(B)` over the budget.
pub fn mass_to_belief(m: &MassFunction, a: FocalSet) -> f64 {
    let bel: f64 = m
        .budget
        .sets()
        .iter()
        .zip(&m.mass)
        .filter(|(b, _)| b.is_subset_of(a))
        .map(|(_, &v)| v)
        .sum();
    bel.clamp(0.0, 1.0)
}

/// Outcome of recovering masses from per-set belief values.
#[derive(Debug, Clone, PartialEq)]
pub struct MassRecovery {
    pub mass: MassFunction,
    /// Input carried (numerically) no belief; `mass` is vacuous.
    pub degenerate: bool,
    /// At least one Möbius coefficient was negative and got clamped.
    pub clamped: bool,
}

/// Möbius inversion restricted to the budget, followed by the validity
/// projection (clamp negatives to zero, renormalize).
pub fn belief_to_mass(budget: &Arc<SetBudget>, bel: &[f64]) -> Result<MassRecovery> {
    if bel.len() != budget.len() {
        return Err(Error::Shape(format!(
            "{} belief values for a budget of {} sets",
            bel.len(),
            budget.len()
        )));
    }
    let mut raw = vec![0.0; budget.len()];
    for &i in budget.subset_order() {
        let below: f64 = budget.proper_subsets(i).iter().map(|&j| raw[j]).sum();
        raw[i] = bel[i] - below;
    }

    let mut clamped = false;
    let mut mass: Vec<f64> = raw
        .iter()
        .map(|&v| {
            if v < ROUNDOFF_FLOOR {
                clamped = true;
            }
            v.max(0.0)
        })
        .collect();
    let total: f64 = mass.iter().sum();
    if !(total > DEGENERATE_TOTAL) {
        return Ok(MassRecovery {
            mass: MassFunction::vacuous(budget.clone()),
            degenerate: true,
            clamped,
        });
    }
    mass.iter_mut().for_each(|v| *v /= total);
    Ok(MassRecovery {
        mass: MassFunction {
            budget: budget.clone(),
            mass,
        },
        degenerate: false,
        clamped,
    })
}

/// Probability distribution over a class frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PignisticDist {
    probs: Vec<f64>,
}

impl PignisticDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidMass("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidMass(format!("probabilities sum to {total}")));
        }
        Ok(PignisticDist { probs })
    }

    pub(crate) fn new_unchecked(probs: Vec<f64>) -> Self {
        PignisticDist { probs }
    }

    pub fn uniform(n: usize) -> Self {
        PignisticDist {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, class: ClassId) -> Self {
        let mut probs = vec![0.0; n];
        probs[class.0] = 1.0;
        PignisticDist { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Most probable class, ties to the lowest index.
    pub fn argmax(&self) -> ClassId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        ClassId(best)
    }
}

/// Anything that can be collapsed into a pignistic distribution.
pub trait ToPignistic {
    fn to_pignistic(&self) -> PignisticDist;
}

impl ToPignistic for PignisticDist {
    fn to_pignistic(&self) -> PignisticDist {
        self.clone()
    }
}

impl ToPignistic for MassFunction {
    fn to_pignistic(&self) -> PignisticDist {
        pignistic(self)
    }
}

/// `BetP(c) = Σ_{A ∋ c} m(A) / |A|`.
pub fn pignistic(m: &MassFunction) -> PignisticDist {
    let mut probs = vec![0.0; m.budget.frame_len()];
    for (set, &mass) in m.budget.sets().iter().zip(&m.mass) {
        if mass == 0.0 {
            continue;
        }
        let share = mass / set.len() as f64;
        for c in set.members() {
            probs[c.0] += share;
        }
    }
    PignisticDist { probs }
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn pignistic_entropy(p: &PignisticDist) -> f64 {
    let h: f64 = p
        .probs
        .iter()
        .filter(|&&q| q > 0.0)
        .map(|&q| -q * q.log2())
        .sum();
    h.clamp(0.0, (p.len() as f64).log2())
}

/// Sums the left and right classes of a seven-class distribution into the
/// merged (Left, Straight, Right) frame.
pub fn merge_to_3class<T: ToPignistic + ?Sized>(input: &T) -> Result<PignisticDist> {
    let p = input.to_pignistic();
    if p.len() != 7 {
        return Err(Error::Shape(format!("expected a 7-class input, got {}", p.len())));
    }
    let mut merged = vec![0.0; 3];
    for (i, &q) in p.probs.iter().enumerate() {
        merged[ClassFrame::merge_class(ClassId(i)).0] += q;
    }
    Ok(PignisticDist { probs: merged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::ClassFrame;

    fn budget7() -> Arc<SetBudget> {
        Arc::new(SetBudget::default_seven())
    }

    fn id(name: &str) -> ClassId {
        ClassFrame::seven().id_of(name).unwrap()
    }

    fn set(names: &[&str]) -> FocalSet {
        FocalSet::from_members(names.iter().map(|n| id(n)))
    }

    #[test]
    fn belief_of_singleton_under_vacuous_is_zero() {
        let m = MassFunction::vacuous(budget7());
        assert_eq!(mass_to_belief(&m, set(&["Straight"])), 0.0);
    }

    #[test]
    fn categorical_mass_has_full_belief_on_frame() {
        let m = MassFunction::from_pairs(budget7(), &[(set(&["Straight"]), 1.0)]).unwrap();
        assert_eq!(mass_to_belief(&m, FocalSet::full(7)), 1.0);
    }

    #[test]
    fn nested_focal_sets_are_both_counted() {
        let m = MassFunction::from_pairs(
            budget7(),
            &[(set(&["Left-Easy"]), 0.4), (set(&["Left-Easy", "Left-Medium"]), 0.6)],
        )
        .unwrap();
        assert!((mass_to_belief(&m, set(&["Left-Easy", "Left-Medium"])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn categorical_belief_inverts_to_singleton() {
        let b = budget7();
        let c = id("Right-Medium");
        let bel: Vec<f64> = b.sets().iter().map(|s| if s.contains(c) { 1.0 } else { 0.0 }).collect();
        let rec = belief_to_mass(&b, &bel).unwrap();
        assert!(!rec.degenerate && !rec.clamped);
        assert_eq!(rec.mass.mass_of(FocalSet::singleton(c)), 1.0);
    }

    #[test]
    fn all_zero_belief_is_degenerate_vacuous() {
        let b = budget7();
        let rec = belief_to_mass(&b, &vec![0.0; b.len()]).unwrap();
        assert!(rec.degenerate);
        assert_eq!(rec.mass, MassFunction::vacuous(b));
    }

    #[test]
    fn clamping_keeps_mass_valid() {
        let b = budget7();
        // Every set scored 0.5: pairs and Θ go negative under inversion.
        let rec = belief_to_mass(&b, &vec![0.5; b.len()]).unwrap();
        assert!(rec.clamped);
        let total: f64 = rec.mass.masses().iter().sum();
        assert!((total - 1.0).abs() < SUM_TOLERANCE);
        assert!(rec.mass.masses().iter().all(|&m| m >= 0.0));
        assert!(belief_to_mass(&b, &[0.5; 3]).is_err());
    }

    #[test]
    fn pignistic_examples() {
        let b = budget7();
        let p = pignistic(&MassFunction::vacuous(b.clone()));
        assert!(p.probs().iter().all(|&q| (q - 1.0 / 7.0).abs() < 1e-15));

        let m = MassFunction::from_pairs(
            b.clone(),
            &[(set(&["Left-Easy", "Left-Medium"]), 0.6), (set(&["Left-Easy"]), 0.4)],
        )
        .unwrap();
        let p = pignistic(&m);
        assert!((p.probs()[id("Left-Easy").0] - 0.7).abs() < 1e-15);
        assert!((p.probs()[id("Left-Medium").0] - 0.3).abs() < 1e-15);
        assert_eq!(p.probs().iter().filter(|&&q| q == 0.0).count(), 5);

        let m = MassFunction::from_pairs(b, &[(set(&["Straight"]), 1.0)]).unwrap();
        assert_eq!(pignistic(&m), PignisticDist::one_hot(7, id("Straight")));
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(pignistic_entropy(&PignisticDist::one_hot(7, ClassId(2))), 0.0);
        assert!((pignistic_entropy(&PignisticDist::uniform(7)) - 7f64.log2()).abs() < 1e-12);
        let p = PignisticDist::new(vec![0.7, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        // -(0.7 log2 0.7 + 0.3 log2 0.3)
        assert!((pignistic_entropy(&p) - 0.881_290_899_230_281_6).abs() < 1e-12);
    }

    #[test]
    fn merge_examples() {
        let m = merge_to_3class(&PignisticDist::uniform(7)).unwrap();
        let expect = [3.0 / 7.0, 1.0 / 7.0, 3.0 / 7.0]; // Left, Straight, Right
        for (a, b) in m.probs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let m = merge_to_3class(&PignisticDist::one_hot(7, id("Left-Hard"))).unwrap();
        assert_eq!(m, PignisticDist::one_hot(3, ClassId(0)));
        let mut probs = vec![0.0; 7];
        probs[id("Left-Easy").0] = 0.5;
        probs[id("Right-Easy").0] = 0.5;
        let m = merge_to_3class(&PignisticDist::new(probs).unwrap()).unwrap();
        assert_eq!(m.probs(), &[0.5, 0.0, 0.5]);
        let vac = MassFunction::vacuous(budget7());
        assert_eq!(merge_to_3class(&vac).unwrap().len(), 3);
        assert!(merge_to_3class(&PignisticDist::uniform(3)).is_err());
    }

    #[test]
    fn top_set_prefers_smaller_sets_on_ties() {
        let m = MassFunction::from_pairs(
            budget7(),
            &[(set(&["Left-Easy", "Left-Medium"]), 0.5), (set(&["Left-Medium"]), 0.5)],
        )
        .unwrap();
        assert_eq!(m.budget().sets()[m.top_set_index()], set(&["Left-Medium"]));
    }

    #[test]
    fn json_entries_round_trip() {
        let frame = ClassFrame::seven();
        let m = MassFunction::from_pairs(budget7(), &[(set(&["Left-Easy", "Left-Medium"]), 0.25), (FocalSet::full(7), 0.75)])
            .unwrap();
        let json = serde_json::to_string(&m.to_entries(&frame)).unwrap();
        let entries: Vec<MassEntry> = serde_json::from_str(&json).unwrap();
        assert_eq!(MassFunction::from_entries(budget7(), &frame, &entries).unwrap(), m);
    }
}
