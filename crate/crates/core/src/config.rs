//! Global TOML configuration. Every section is optional and falls back to
//! the built-in defaults.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::active::ALConfig;
use crate::beliefs::{ClassFrame, SetBudget};
use crate::controller::{validate_policy, TierPolicy};
use crate::error::{Error, Result};
use crate::net::TrainConfig;
use crate::pipeline::{PlannerConfig, SimConfig, SimSetup};
use crate::track::{DatasetConfig, RasterSpec};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    /// Focal sets by class name; absent means the default budget.
    pub sets: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub budget: BudgetConfig,
    pub raster: RasterSpec,
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    pub policy: TierPolicy,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub active: ALConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Format {
                path: path.to_path_buf(),
                message: m,
            },
            other => other,
        })
    }

    /// Default config or the file at `path`.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Config::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        validate_policy(&self.policy)?;
        self.train.validate()?;
        self.budget()?;
        let mut al = self.active.clone();
        al.train = self.train.clone();
        al.validate()
    }

    pub fn frame(&self) -> ClassFrame {
        ClassFrame::for_mode(self.dataset.mode)
    }

    pub fn budget(&self) -> Result<Arc<SetBudget>> {
        let frame = self.frame();
        let budget = match &self.budget.sets {
            Some(sets) => SetBudget::from_names(&frame, sets)?,
            None => SetBudget::default_for(&frame),
        };
        Ok(Arc::new(budget))
    }

    /// Active-learning settings with the shared training section filled in.
    pub fn active_learning(&self) -> ALConfig {
        ALConfig {
            train: self.train.clone(),
            ..self.active.clone()
        }
    }

    pub fn sim_setup(&self) -> SimSetup {
        SimSetup {
            policy: self.policy.clone(),
            planner: self.planner.clone(),
            sim: self.sim.clone(),
            scene: self.dataset.scene.clone(),
            raster: self.raster.clone(),
            config_hash: self.hash(),
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        let digest = Sha256::digest(&json);
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::{ClassId, FrameMode};
    use crate::pipeline::plan_speed;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn shipped_default_file_matches_the_built_in_defaults() {
        let shipped = include_str!("../../../config/default.toml");
        assert_eq!(Config::from_toml(shipped).unwrap(), Config::default());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = Config::default();
        let back = Config::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 16);
    }

    #[test]
    fn planner_defaults_come_from_the_file() {
        let cfg = Config::from_toml("[planner]\nstraight_rpm = 1000.0\nhard_rpm = 400.0\n").unwrap();
        let f = cfg.frame();
        assert_eq!(plan_speed(f.straight(), &f, &cfg.planner), 1000.0);
        assert_eq!(plan_speed(ClassId(0), &f, &cfg.planner), 400.0);
    }

    #[test]
    fn sections_override_and_change_the_hash() {
        let cfg = Config::from_toml("[dataset]\nmode = \"three\"\n[train]\nepochs = 5\n").unwrap();
        assert_eq!(cfg.dataset.mode, FrameMode::Three);
        assert_eq!(cfg.budget().unwrap().len(), 7);
        assert_ne!(cfg.hash(), Config::default().hash());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(Config::from_toml("[nonsense]\n").is_err());
        let bad_policy = "[policy]\nfinal_scale = 0.5\n[[policy.tiers]]\nupper_bits = 1.0\nscale = 1.0\n";
        assert!(matches!(Config::from_toml(bad_policy), Err(Error::Policy(_))));
        let bad_budget = "[budget]\nsets = [[\"Straight\"]]\n";
        assert!(Config::from_toml(bad_budget).is_err());
    }
}
