//! Run configuration: one JSON document holding every module's settings.
//!
//! Omitted fields take their defaults. `plant` and `rewards` default to the
//! chosen robot profile's values, so they are optional in the file and always
//! present after [`RunConfig::resolved`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curriculum::CurriculumConfig;
use crate::env::EnvConfig;
use crate::error::{invalid, Error, Result};
use crate::learner::PpoConfig;
use crate::plant::{PlantConfig, RobotProfile};
use crate::task::{RewardConfig, TaskKind};
use crate::tuner::{Assignment, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    ArmOnly,
    FullBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub episodes: usize,
    /// Width of the distance bins in `error_by_distance.csv` (m).
    pub distance_bin: f64,
    pub phi_bins: usize,
    pub theta_bins: usize,
    /// Added to the run seed for evaluation streams.
    pub seed_offset: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 500, distance_bin: 1.0, phi_bins: 12, theta_bins: 5, seed_offset: 1_000_003 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub profile: RobotProfile,
    pub task: TaskKind,
    pub mode: ControlMode,
    pub seeds: Vec<u64>,
    pub iterations: u32,
    pub env_count: usize,
    /// Write a checkpoint every this many iterations (0 disables periodic checkpoints).
    pub checkpoint_every: u32,
    pub output_dir: PathBuf,
    pub env: EnvConfig,
    pub plant: Option<PlantConfig>,
    pub rewards: Option<RewardConfig>,
    pub curriculum: CurriculumConfig,
    pub ppo: PpoConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            profile: RobotProfile::Humanoid,
            task: TaskKind::General,
            mode: ControlMode::FullBody,
            seeds: vec![0],
            iterations: 1500,
            env_count: 256,
            checkpoint_every: 100,
            output_dir: PathBuf::from("runs"),
            env: EnvConfig::default(),
            plant: None,
            rewards: None,
            curriculum: CurriculumConfig::default(),
            ppo: PpoConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    /// Fills profile-dependent defaults and applies the control mode.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        if cfg.plant.is_none() {
            cfg.plant = Some(PlantConfig::for_profile(cfg.profile));
        }
        if cfg.rewards.is_none() {
            cfg.rewards = Some(match cfg.profile {
                RobotProfile::Humanoid => RewardConfig::humanoid(),
                RobotProfile::Quadruped => RewardConfig::quadruped(),
            });
        }
        cfg.env.arm_only = cfg.mode == ControlMode::ArmOnly;
        cfg
    }

    pub fn plant_config(&self) -> PlantConfig {
        self.plant.clone().unwrap_or_else(|| PlantConfig::for_profile(self.profile))
    }

    pub fn reward_config(&self) -> RewardConfig {
        self.resolved().rewards.expect("resolved")
    }

    pub fn validate(&self) -> Result<()> {
        if self.env_count == 0 {
            return invalid("env_count must be >= 1");
        }
        if self.iterations == 0 {
            return invalid("iterations must be >= 1");
        }
        if self.seeds.is_empty() {
            return invalid("at least one seed is required");
        }
        let r = self.resolved();
        let plant = r.plant_config();
        plant.validate()?;
        r.env.validate(&plant)?;
        r.reward_config().validate()?;
        self.ppo.validate()?;
        if self.ppo.minibatches > self.env_count * self.ppo.steps_per_env {
            return invalid(format!(
                "{} minibatches exceed the batch of {} transitions",
                self.ppo.minibatches,
                self.env_count * self.ppo.steps_per_env
            ));
        }
        if !(self.eval.distance_bin > 0.0) || self.eval.phi_bins == 0 || self.eval.theta_bins == 0 {
            return invalid("evaluation bins must be positive");
        }
        self.sweep.validate()?;
        Ok(())
    }

    /// Applies a sweep assignment. Unknown names are rejected; a recurrent
    /// backbone is not available.
    pub fn with_assignment(&self, params: &Assignment) -> Result<Self> {
        use crate::tuner::space::names::*;
        let mut cfg = self.resolved();
        let base = cfg.reward_config();
        let (mut scale, mut stab, mut roll) = (
            base.reward_scale,
            base.lambda2 / base.reward_scale,
            base.lambda3 / base.reward_scale,
        );
        for (name, value) in params {
            let num = || value.as_f64().ok_or_else(|| Error::InvalidArgument(format!("{name} must be numeric")));
            let flag = || value.as_bool().ok_or_else(|| Error::InvalidArgument(format!("{name} must be boolean")));
            match name.as_str() {
                STABILITY_REWARD_PCT => stab = num()?,
                ROLL_REWARD_PCT => roll = num()?,
                REWARD_SCALE => scale = num()?,
                STABILITY_THRESHOLD => cfg.curriculum.thresholds.stability = num()?,
                ACCURACY_THRESHOLD => cfg.curriculum.thresholds.accuracy = num()?,
                DESIRED_KL => cfg.ppo.desired_kl = num()?,
                VALUE_LOSS_COEF => cfg.ppo.value_loss_coef = num()?,
                GRU => {
                    if flag()? {
                        return invalid("the recurrent backbone is not implemented");
                    }
                }
                FOOT_PITCH_STATE => cfg.env.observe.foot_pitch = flag()?,
                BODY_ROLL_STATE => cfg.env.observe.body_roll = flag()?,
                ESTIMATE_STATE => cfg.env.observe.estimate_displacement = flag()?,
                RELEASED_STATE => cfg.env.observe.ball_released = flag()?,
                other => return invalid(format!("unknown sweep parameter {other}")),
            }
        }
        let derived = RewardConfig::from_scale(scale, stab, roll);
        cfg.rewards = Some(RewardConfig {
            lambda1: derived.lambda1,
            lambda2: derived.lambda2,
            lambda3: derived.lambda3,
            reward_scale: scale,
            ..base
        });
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
