//! Throw targets and reward terms.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EpisodeSummary;
use crate::error::{invalid, Result};
use crate::math::Vec3;

/// Spherical target command. `theta_tilde` is the cosine of the polar angle,
/// so uniform sampling in `[0, 1]` covers the upper hemisphere evenly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetCommand {
    pub theta_tilde: f64,
    pub phi: f64,
    pub r: f64,
}

impl TargetCommand {
    pub fn new(theta_tilde: f64, phi: f64, r: f64) -> Result<Self> {
        let cmd = Self { theta_tilde, phi, r };
        cmd.validate()?;
        Ok(cmd)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta_tilde) {
            return invalid(format!("theta_tilde must be in [0, 1], got {}", self.theta_tilde));
        }
        if !(0.0..TAU).contains(&self.phi) {
            return invalid(format!("phi must be in [0, 2π), got {}", self.phi));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return invalid(format!("r must be positive, got {}", self.r));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.theta_tilde, self.phi, self.r]
    }
}

pub fn to_cartesian(cmd: &TargetCommand) -> Result<Vec3> {
    cmd.validate()?;
    let sin_theta = (1.0 - cmd.theta_tilde * cmd.theta_tilde).max(0.0).sqrt();
    let (sin_phi, cos_phi) = cmd.phi.sin_cos();
    Ok(Vec3::new(cmd.r * sin_theta * cos_phi, cmd.r * sin_theta * sin_phi, cmd.r * cmd.theta_tilde))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Targets on the ground straight ahead.
    Distance,
    /// Targets anywhere on the upper hemisphere.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskMode {
    pub kind: TaskKind,
    pub distance_range: [f64; 2],
}

impl TaskMode {
    pub fn new(kind: TaskKind, distance_range: [f64; 2]) -> Result<Self> {
        let mode = Self { kind, distance_range };
        mode.validate()?;
        Ok(mode)
    }

    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.distance_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return invalid(format!("bad distance range [{lo}, {hi}]"));
        }
        Ok(())
    }
}

pub fn sample_target<R: Rng + ?Sized>(mode: &TaskMode, rng: &mut R) -> TargetCommand {
    let [lo, hi] = mode.distance_range;
    let r = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    match mode.kind {
        TaskKind::Distance => TargetCommand { theta_tilde: 0.0, phi: 0.0, r },
        TaskKind::General => {
            let theta_tilde = rng.random_range(0.0..=1.0);
            let phi = rng.random_range(0.0..TAU);
            TargetCommand { theta_tilde, phi, r }
        }
    }
}

/// Reward coefficients and shaping constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub reward_scale: f64,
    pub roll_margin: f64,
    pub roll_sigmoid_gain: f64,
    pub roll_sigmoid_center: f64,
    pub detach_threshold: f64,
    /// Multiply the per-step roll term by the control period.
    pub dense_dt_scaling: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self::humanoid()
    }
}

impl RewardConfig {
    /// Coefficients from a scale and two relative weights:
    /// `λ1 = scale`, `λ2 = scale·stability_pct`, `λ3 = scale·roll_pct`.
    pub fn from_scale(reward_scale: f64, stability_pct: f64, roll_pct: f64) -> Self {
        Self {
            lambda1: reward_scale,
            lambda2: reward_scale * stability_pct,
            lambda3: reward_scale * roll_pct,
            reward_scale,
            roll_margin: 0.1,
            roll_sigmoid_gain: 10.0,
            roll_sigmoid_center: 0.3,
            detach_threshold: 0.25,
            dense_dt_scaling: true,
        }
    }

    pub fn humanoid() -> Self {
        Self::from_scale(2.54, 0.02, 0.17)
    }

    pub fn quadruped() -> Self {
        Self { lambda1: 1.0, lambda2: 0.1, lambda3: 0.0, ..Self::from_scale(1.0, 0.0, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2), ("lambda3", self.lambda3)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be >= 0, got {v}"));
            }
        }
        if !(self.roll_margin > 0.0) {
            return invalid("roll_margin must be positive");
        }
        if !(self.detach_threshold > 0.0) {
            return invalid("detach_threshold must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub throwing: f64,
    pub stability: f64,
    pub roll: f64,
    pub total: f64,
}

pub fn throwing_reward(error: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return invalid(format!("target distance must be positive, got {r}"));
    }
    if !(error >= 0.0) {
        return invalid(format!("throwing error must be >= 0, got {error}"));
    }
    Ok(1.0 - (error / r).min(1.0))
}

/// Positive inside the safe roll margin, approaching −1 for large roll.
pub fn roll_penalty(roll: f64, cfg: &RewardConfig) -> f64 {
    let a = roll.abs();
    let numerator = (1.0 - a / cfg.roll_margin).exp() - 1.0;
    let denominator = 1.0 + (-cfg.roll_sigmoid_gain * (a - cfg.roll_sigmoid_center)).exp();
    numerator / denominator
}

/// 1 when the episode released the ball, never fell or faulted, and kept the
/// base height inside its safe band; 0 otherwise.
pub fn stability_reward(summary: &EpisodeSummary) -> f64 {
    let [lo, hi] = summary.height_bounds;
    let stable = summary.released
        && !summary.fell
        && !summary.fault
        && summary.min_base_height >= lo
        && summary.max_base_height <= hi;
    if stable {
        1.0
    } else {
        0.0
    }
}
