//! Entropy-gated speed scaling.
//!
//! A [`TierPolicy`] partitions entropy (bits) into half-open tiers
//! `[lower, upper)`; each tier multiplies the planner's requested wheel speed
//! by a fixed factor. An entropy exactly on a bound belongs to the upper,
//! more cautious tier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed above `log2(frame size)` before an entropy is rejected.
pub const ENTROPY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tier {
    /// Exclusive upper entropy bound in bits.
    pub upper_bits: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TierPolicy {
    /// Bounded tiers in increasing order.
    pub tiers: Vec<Tier>,
    /// Scale of the open-ended tier above the last bound.
    pub final_scale: f64,
}

impl Default for TierPolicy {
    fn default() -> Self {
        TierPolicy {
            tiers: vec![
                Tier { upper_bits: 2.2, scale: 1.0 },
                Tier { upper_bits: 2.3, scale: 0.9 },
                Tier { upper_bits: 2.4, scale: 0.8 },
                Tier { upper_bits: 2.6, scale: 0.6 },
            ],
            final_scale: 0.0,
        }
    }
}

impl TierPolicy {
    /// Always full speed.
    pub fn always_full() -> Self {
        TierPolicy {
            tiers: Vec::new(),
            final_scale: 1.0,
        }
    }

    pub fn tier_count(&self) -> usize {
        self.tiers.len() + 1
    }

    pub fn scale_of(&self, tier: usize) -> f64 {
        self.tiers.get(tier).map_or(self.final_scale, |t| t.scale)
    }

    /// Lower bound of the open-ended tier, if there is more than one tier.
    pub fn top_bound(&self) -> Option<f64> {
        self.tiers.last().map(|t| t.upper_bits)
    }

    pub fn tier_for(&self, entropy_bits: f64) -> usize {
        self.tiers
            .iter()
            .position(|t| entropy_bits < t.upper_bits)
            .unwrap_or(self.tiers.len())
    }

    /// Every invariant violation; empty when the policy is usable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let scales: Vec<f64> = self.tiers.iter().map(|t| t.scale).chain([self.final_scale]).collect();
        if scales.iter().any(|s| !(0.0..=1.0).contains(s)) {
            out.push("scale factors must lie in [0, 1]".to_string());
        }
        if self.tiers.iter().any(|t| !t.upper_bits.is_finite() || t.upper_bits < 0.0) {
            out.push("entropy bounds must be finite and non-negative".to_string());
        }
        if self.tiers.windows(2).any(|w| w[1].upper_bits <= w[0].upper_bits) {
            out.push("entropy bounds must be strictly increasing".to_string());
        }
        if scales.windows(2).any(|w| w[1] > w[0]) {
            out.push("scale factors must be non-increasing".to_string());
        }
        if scales[0] != 1.0 {
            out.push("first tier scale must be 1.0".to_string());
        }
        if scales.len() > 1 && self.final_scale != 0.0 {
            out.push("last tier scale must be 0.0".to_string());
        }
        out
    }
}

pub fn validate_policy(policy: &TierPolicy) -> Result<()> {
    let v = policy.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Policy(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedCommand {
    pub requested_rpm: f64,
    pub scaled_rpm: f64,
    pub tier_index: usize,
    pub entropy_bits: f64,
}

/// Applies the policy to one speed request.
pub fn scale_speed(requested_rpm: f64, entropy_bits: f64, policy: &TierPolicy, max_entropy_bits: f64) -> Result<SpeedCommand> {
    if !(requested_rpm >= 0.0) || !requested_rpm.is_finite() {
        return Err(Error::Config(format!("requested speed {requested_rpm} rpm is invalid")));
    }
    if !(entropy_bits >= 0.0) || entropy_bits > max_entropy_bits + ENTROPY_SLACK {
        return Err(Error::EntropyOutOfRange {
            entropy: entropy_bits,
            max: max_entropy_bits,
        });
    }
    let tier_index = policy.tier_for(entropy_bits);
    Ok(SpeedCommand {
        requested_rpm,
        scaled_rpm: requested_rpm * policy.scale_of(tier_index),
        tier_index,
        entropy_bits,
    })
}

/// Stateful wrapper used by the pipeline: optional exponential smoothing of
/// the entropy before gating (`alpha = 0` disables it).
#[derive(Debug, Clone)]
pub struct SpeedController {
    policy: TierPolicy,
    max_entropy_bits: f64,
    alpha: f64,
    smoothed: Option<f64>,
}

impl SpeedController {
    pub fn new(policy: TierPolicy, max_entropy_bits: f64, smoothing_alpha: f64) -> Result<Self> {
        validate_policy(&policy)?;
        if !(0.0..1.0).contains(&smoothing_alpha) {
            return Err(Error::Config("smoothing alpha must lie in [0, 1)".into()));
        }
        Ok(SpeedController {
            policy,
            max_entropy_bits,
            alpha: smoothing_alpha,
            smoothed: None,
        })
    }

    pub fn policy(&self) -> &TierPolicy {
        &self.policy
    }

    /// `e_t = alpha * e_{t-1} + (1 - alpha) * raw`.
    pub fn command(&mut self, requested_rpm: f64, entropy_bits: f64) -> Result<SpeedCommand> {
        let e = match self.smoothed {
            Some(prev) if self.alpha > 0.0 => self.alpha * prev + (1.0 - self.alpha) * entropy_bits,
            _ => entropy_bits,
        };
        self.smoothed = Some(e);
        scale_speed(requested_rpm, e, &self.policy, self.max_entropy_bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAX7: f64 = 2.807_354_922_057_604;

    #[test]
    fn policy_examples() {
        let p = TierPolicy::default();
        let c = scale_speed(1000.0, 1.0, &p, MAX7).unwrap();
        assert_eq!((c.scaled_rpm, c.tier_index), (1000.0, 0));
        let c = scale_speed(1000.0, 2.35, &p, MAX7).unwrap();
        assert_eq!((c.scaled_rpm, c.tier_index), (800.0, 2));
        let c = scale_speed(1000.0, 2.7, &p, MAX7).unwrap();
        assert_eq!((c.scaled_rpm, c.tier_index), (0.0, 4));
    }

    #[test]
    fn bounds_belong_to_upper_tier() {
        let p = TierPolicy::default();
        for (e, tier) in [(2.2, 1), (2.3, 2), (2.4, 3), (2.6, 4)] {
            assert_eq!(scale_speed(500.0, e, &p, MAX7).unwrap().tier_index, tier);
        }
    }

    #[test]
    fn impossible_entropy_is_an_error() {
        let p = TierPolicy::default();
        assert!(matches!(scale_speed(100.0, 2.9, &p, MAX7), Err(Error::EntropyOutOfRange { .. })));
        assert!(scale_speed(100.0, MAX7 + 1e-7, &p, MAX7).is_ok());
        assert!(scale_speed(100.0, -0.1, &p, MAX7).is_err());
    }

    #[test]
    fn validation() {
        assert!(validate_policy(&TierPolicy::default()).is_ok());
        assert!(validate_policy(&TierPolicy::always_full()).is_ok());
        let mut p = TierPolicy::default();
        p.tiers[2].scale = 0.95;
        let v = p.violations();
        assert!(v.contains(&"scale factors must be non-increasing".to_string()), "{v:?}");
        let mut p = TierPolicy::default();
        p.tiers[1].upper_bits = 2.1;
        p.final_scale = 0.3;
        assert_eq!(p.violations().len(), 2);
    }

    #[test]
    fn smoothing_delays_reaction() {
        let mut raw = SpeedController::new(TierPolicy::default(), MAX7, 0.0).unwrap();
        let mut smooth = SpeedController::new(TierPolicy::default(), MAX7, 0.8).unwrap();
        raw.command(1000.0, 0.5).unwrap();
        smooth.command(1000.0, 0.5).unwrap();
        assert_eq!(raw.command(1000.0, 2.7).unwrap().scaled_rpm, 0.0);
        assert_eq!(smooth.command(1000.0, 2.7).unwrap().scaled_rpm, 1000.0);
    }
}
