//! Adaptive difficulty schedule.
//!
//! Difficulty advances by a fixed step whenever the iteration's throwing
//! accuracy and stability rate both clear their thresholds. The same trigger
//! drives the quadruped distance-throw ramps for body-action scale and the
//! post-release stability wait.

use serde::{Deserialize, Serialize};

use crate::plant::RobotProfile;
use crate::task::{TaskKind, TaskMode};

const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub accuracy: f64,
    pub stability: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { accuracy: 0.51, stability: 0.22 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurriculumConfig {
    pub thresholds: Thresholds,
    pub level_step: f64,
    pub body_scale_step: f64,
    pub wait_step: f64,
    pub max_wait: f64,
    /// Wait used by profiles without a wait ramp.
    pub fixed_wait: f64,
    pub final_ramp_iters: u32,
    /// Overrides the profile/task default maximum distance.
    pub max_dist: Option<f64>,
    pub min_dist: f64,
    pub general_start_max: f64,
    pub humanoid_distance_start: f64,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        Self {
            thresholds: Thresholds::default(),
            level_step: 0.01,
            body_scale_step: 0.02,
            wait_step: 0.02,
            max_wait: 2.0,
            fixed_wait: 1.0,
            final_ramp_iters: 100,
            max_dist: None,
            min_dist: 1.0,
            general_start_max: 3.0,
            humanoid_distance_start: 4.0,
        }
    }
}

pub fn default_max_dist(profile: RobotProfile, task: TaskKind) -> f64 {
    match (task, profile) {
        (TaskKind::General, _) => 5.0,
        (TaskKind::Distance, RobotProfile::Humanoid) => 12.0,
        (TaskKind::Distance, RobotProfile::Quadruped) => 14.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    /// Mean throwing reward over episodes that ended this iteration.
    pub mean_accuracy: f64,
    /// Fraction of those episodes that earned the stability reward.
    pub stability_rate: f64,
}

/// What an environment needs to know from the curriculum between updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub task: TaskMode,
    pub stability_wait: f64,
    pub body_action_scale: f64,
    pub iteration: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumState {
    pub iteration: u64,
    pub level: f64,
    pub body_action_scale: f64,
    pub stability_wait: f64,
    pub max_dist: f64,
    pub profile: RobotProfile,
    pub task: TaskKind,
    pub config: CurriculumConfig,
}

impl CurriculumState {
    pub fn new(profile: RobotProfile, task: TaskKind, config: CurriculumConfig) -> Self {
        let ramps = profile == RobotProfile::Quadruped && task == TaskKind::Distance;
        Self {
            iteration: 0,
            level: 0.0,
            body_action_scale: if ramps { 0.0 } else { 1.0 },
            stability_wait: if ramps { 0.0 } else { config.fixed_wait },
            max_dist: config.max_dist.unwrap_or_else(|| default_max_dist(profile, task)),
            profile,
            task,
            config,
        }
    }

    fn has_ramps(&self) -> bool {
        self.profile == RobotProfile::Quadruped && self.task == TaskKind::Distance
    }

    pub fn criteria_met(&self, metrics: &IterationMetrics) -> bool {
        metrics.mean_accuracy >= self.config.thresholds.accuracy
            && metrics.stability_rate >= self.config.thresholds.stability
    }

    pub fn task_mode(&self) -> TaskMode {
        TaskMode { kind: self.task, distance_range: task_range(self) }
    }

    pub fn schedule(&self) -> Schedule {
        Schedule {
            task: self.task_mode(),
            stability_wait: self.stability_wait,
            body_action_scale: self.body_action_scale,
            iteration: self.iteration,
        }
    }

    pub const CSV_HEADER: &'static str = "iteration,level,body_action_scale,stability_wait,range_min,range_max";

    pub fn csv_row(&self) -> String {
        let [lo, hi] = task_range(self);
        format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.iteration, self.level, self.body_action_scale, self.stability_wait, lo, hi
        )
    }
}

fn advance(value: f64, step: f64, cap: f64) -> f64 {
    let v = value + step;
    if v >= cap - SNAP {
        cap
    } else {
        v
    }
}

/// One adaptive step. The iteration counter always advances; everything else
/// moves only when both thresholds are met.
pub fn update(state: &CurriculumState, metrics: &IterationMetrics) -> CurriculumState {
    let mut next = state.clone();
    next.iteration += 1;
    if state.criteria_met(metrics) {
        next.level = advance(state.level, state.config.level_step, 1.0);
        if state.has_ramps() {
            next.body_action_scale = advance(state.body_action_scale, state.config.body_scale_step, 1.0);
            next.stability_wait =
                advance(state.stability_wait, state.config.wait_step, state.config.max_wait);
        }
    }
    next
}

/// Target distance range at the current level.
pub fn task_range(state: &CurriculumState) -> [f64; 2] {
    let cfg = &state.config;
    match (state.task, state.profile) {
        (TaskKind::General, _) => {
            let hi = cfg.general_start_max + state.level * (state.max_dist - cfg.general_start_max);
            [cfg.min_dist, hi]
        }
        (TaskKind::Distance, RobotProfile::Humanoid) => {
            let start = cfg.humanoid_distance_start;
            let d = start + state.level * (state.max_dist - start);
            [d, d]
        }
        (TaskKind::Distance, RobotProfile::Quadruped) => [state.max_dist, state.max_dist],
    }
}

/// Linear completion of the level over the last iterations of training so
/// that it reaches 1 on the final one. No-op outside the ramp window.
pub fn final_distance_ramp(state: &CurriculumState, remaining_iters: u32) -> CurriculumState {
    let mut next = state.clone();
    if remaining_iters == 0 || remaining_iters > state.config.final_ramp_iters || state.level >= 1.0 {
        return next;
    }
    next.level = advance(state.level, (1.0 - state.level) / remaining_iters as f64, 1.0);
    next
}
