//! Hyperparameter search: search space, TPE suggestions and an asynchronous,
//! resumable sweep harness.

pub mod space;
pub mod sweep;
pub mod tpe;

use serde::{Deserialize, Serialize};

pub use space::{Assignment, Dimension, Domain, ParamValue, SearchSpace};
pub use sweep::{load_history, run_sweep, SweepConfig, SweepResult, TrialOutcome, TrialRunner};
pub use tpe::{suggest, TpeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Complete,
    Running,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub id: u64,
    pub params: Assignment,
    pub status: TrialStatus,
    pub objective: Option<f64>,
    pub accuracy: Option<f64>,
    pub stability_rate: Option<f64>,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: Option<f64>,
    pub error: Option<String>,
}

/// Sweep objective: accuracy plus stability rate clipped at 75%.
pub fn objective(accuracy: f64, stability_rate: f64) -> f64 {
    accuracy + stability_rate.min(0.75)
}

/// Best complete trial; ties go to the lower id.
pub fn best_trial(history: &[TrialRecord]) -> Option<&TrialRecord> {
    history
        .iter()
        .filter(|t| t.status == TrialStatus::Complete && t.objective.is_some_and(f64::is_finite))
        .min_by(|a, b| b.objective.unwrap().total_cmp(&a.objective.unwrap()).then(a.id.cmp(&b.id)))
}

/// Cheap stand-in for a training run: a smooth bump over the continuous
/// dimensions (peaked at the paper's best trial) and agreement of the boolean
/// toggles with that trial.
pub fn synthetic_outcome(params: &Assignment, space: &SearchSpace) -> TrialOutcome {
    use space::names::*;
    let peak = |name: &str| match name {
        STABILITY_REWARD_PCT => Some(0.02),
        STABILITY_THRESHOLD => Some(0.22),
        ACCURACY_THRESHOLD => Some(0.51),
        DESIRED_KL => Some(0.02),
        ROLL_REWARD_PCT => Some(0.17),
        REWARD_SCALE => Some(2.54),
        VALUE_LOSS_COEF => Some(0.98),
        _ => None,
    };
    let flag = |name: &str| match name {
        ESTIMATE_STATE | RELEASED_STATE => Some(true),
        FOOT_PITCH_STATE | BODY_ROLL_STATE => Some(false),
        _ => None,
    };
    let mut sq = 0.0;
    let (mut hits, mut flags) = (0usize, 0usize);
    for d in &space.dims {
        let Some(v) = params.get(&d.name) else { continue };
        if let (Some((lo, hi)), Some(x)) = (d.domain.internal_bounds(), v.as_f64()) {
            let c = peak(&d.name).map(|p| d.domain.to_internal(p)).unwrap_or((lo + hi) / 2.0);
            sq += ((d.domain.to_internal(x) - c) / (hi - lo)).powi(2);
        }
        if let (Some(want), Some(b)) = (flag(&d.name), v.as_bool()) {
            flags += 1;
            hits += (want == b) as usize;
        }
    }
    let accuracy = (-4.0 * sq).exp();
    let stability_rate = if flags == 0 { 0.75 } else { hits as f64 / flags as f64 };
    TrialOutcome::from_metrics(accuracy, stability_rate)
}
