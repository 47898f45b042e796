//! Deterministic evaluation with domain randomisation on.
//!
//! Episode `k` runs in a fresh environment seeded from `(seed, k)` with a
//! target drawn from a separate stream, so results do not depend on how
//! episodes are batched and two controllers evaluated with the same seed see
//! the same targets. A ball that was never released is scored with `E = r`.
//!
//! Files written by [`write_report`]:
//!
//! - `episodes.csv`: [`EPISODES_HEADER`]
//! - `error_by_distance.csv`: [`DISTANCE_HEADER`]
//! - `polar_grid.csv`: [`POLAR_HEADER`] (`theta` is the adjusted polar angle `θ̃`)
//! - `summary.json`: metrics plus the resolved configuration

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::curriculum::{task_range, CurriculumState, Schedule};
use crate::env::{env_seed, EpisodeSummary, ThrowEnv, ACT_DIM, OBS_DIM};
use crate::error::{invalid, Error, Result};
use crate::learner::PolicyParams;
use crate::plant::RobotProfile;
use crate::task::{sample_target, TargetCommand, TaskKind};

pub const EPISODES_HEADER: &str = "index,theta_tilde,phi,r,released,error,normalized_error,throwing,landing_distance,stable,fell,fault,max_abs_tilt,total_reward,steps";
pub const DISTANCE_HEADER: &str = "bin_lo,bin_hi,count,mean_error,std_error,mean_normalized_error,stability_rate";
pub const POLAR_HEADER: &str = "phi_lo,phi_hi,theta_lo,theta_hi,count,mean_error,mean_normalized_error";
pub const POLAR_DIFF_HEADER: &str = "phi_lo,phi_hi,theta_lo,theta_hi,count_a,count_b,mean_error_a,mean_error_b,difference";

/// Maps a batch of observations (row-major `[rows, OBS_DIM]`) to actions.
pub trait Controller: Sync {
    fn act_batch(&self, obs: &[f64]) -> Vec<f64>;
}

impl Controller for PolicyParams {
    fn act_batch(&self, obs: &[f64]) -> Vec<f64> {
        let x = self.prepare(obs);
        self.mean(x.view()).iter().map(|v| *v as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub index: usize,
    pub target: TargetCommand,
    pub released: bool,
    pub error: f64,
    pub normalized_error: f64,
    pub throwing: f64,
    pub landing_distance: Option<f64>,
    pub stable: bool,
    pub fell: bool,
    pub fault: bool,
    pub max_abs_tilt: f64,
    pub total_reward: f64,
    pub steps: u32,
}

impl EpisodeRecord {
    fn from_summary(index: usize, s: &EpisodeSummary) -> Self {
        let error = s.error.unwrap_or(s.target.r);
        Self {
            index,
            target: s.target,
            released: s.released,
            error,
            normalized_error: error / s.target.r,
            throwing: s.throwing.unwrap_or(0.0),
            landing_distance: s.landing_distance,
            stable: s.stability >= 1.0,
            fell: s.fell,
            fault: s.fault,
            max_abs_tilt: s.max_abs_tilt,
            total_reward: s.rewards.total,
            steps: s.steps,
        }
    }

    fn csv(&self) -> String {
        let t = &self.target;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.index,
            t.theta_tilde,
            t.phi,
            t.r,
            self.released as u8,
            self.error,
            self.normalized_error,
            self.throwing,
            self.landing_distance.map_or(String::new(), |d| d.to_string()),
            self.stable as u8,
            self.fell as u8,
            self.fault as u8,
            self.max_abs_tilt,
            self.total_reward,
            self.steps
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_normalized_error: f64,
    pub stability_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarCell {
    pub phi: [f64; 2],
    pub theta: [f64; 2],
    pub count: usize,
    pub mean_error: f64,
    pub mean_normalized_error: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_normalized_error: f64,
    pub stability_rate: f64,
    pub release_rate: f64,
    /// Farthest landing point among stable episodes.
    pub max_stable_range: Option<f64>,
    pub mean_return: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub episodes: Vec<EpisodeRecord>,
    pub summary: EvalSummary,
    pub distance_bins: Vec<DistanceBin>,
    pub polar: Vec<PolarCell>,
    pub range: [f64; 2],
}

/// Schedule of a finished curriculum with the privileged fade complete.
pub fn final_schedule(cfg: &RunConfig) -> Schedule {
    let mut c = CurriculumState::new(cfg.profile, cfg.task, cfg.curriculum);
    c.level = 1.0;
    if cfg.profile == RobotProfile::Quadruped && cfg.task == TaskKind::Distance {
        c.body_action_scale = 1.0;
        c.stability_wait = cfg.curriculum.max_wait;
    }
    c.iteration = u64::from(cfg.env.privileged_fade_iters).max(cfg.iterations.into());
    let mut s = c.schedule();
    s.task.distance_range = task_range(&c);
    s
}

pub fn eval_targets(schedule: &Schedule, n: usize, seed: u64) -> Vec<TargetCommand> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7A26_E7);
    (0..n).map(|_| sample_target(&schedule.task, &mut rng)).collect()
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt())
}

/// Runs `n` episodes, `batch` at a time, with the controller's actions.
pub fn evaluate<C: Controller>(
    controller: &C,
    cfg: &RunConfig,
    schedule: &Schedule,
    n: usize,
    seed: u64,
) -> Result<EvalReport> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let plant = cfg.plant_config();
    let rewards = cfg.reward_config();
    let targets = eval_targets(schedule, n, seed);
    let batch = cfg.env_count.max(1);
    let mut records = Vec::with_capacity(n);

    for start in (0..n).step_by(batch) {
        let end = (start + batch).min(n);
        let mut envs: Vec<ThrowEnv> = (start..end)
            .map(|k| ThrowEnv::new(cfg.env, plant.clone(), rewards, *schedule, env_seed(seed, k)))
            .collect();
        for (env, target) in envs.iter_mut().zip(&targets[start..end]) {
            env.reset_to_target(schedule, *target)?;
        }
        loop {
            let active: Vec<usize> = (0..envs.len()).filter(|i| !envs[*i].is_done()).collect();
            if active.is_empty() {
                break;
            }
            let obs: Vec<f64> = active.iter().flat_map(|i| envs[*i].last_observation().to_vec()).collect();
            let actions = controller.act_batch(&obs);
            if actions.len() != active.len() * ACT_DIM {
                return invalid(format!("controller returned {} values for {} rows", actions.len(), active.len()));
            }
            if actions.iter().any(|a| !a.is_finite()) {
                return Err(Error::NumericalFault("controller produced a non-finite action".into()));
            }
            let mut chosen: Vec<(&mut ThrowEnv, [f64; ACT_DIM])> = envs
                .iter_mut()
                .enumerate()
                .filter(|(_, e)| !e.is_done())
                .zip(actions.chunks_exact(ACT_DIM))
                .map(|((_, e), a)| (e, a.try_into().expect("ACT_DIM chunk")))
                .collect();
            chosen.par_iter_mut().try_for_each(|(env, a)| env.step(a).map(|_| ()))?;
        }
        records.extend(envs.iter().enumerate().map(|(j, e)| EpisodeRecord::from_summary(start + j, e.episode_summary())));
    }
    Ok(build_report(records, schedule.task.distance_range, &cfg))
}

fn build_report(episodes: Vec<EpisodeRecord>, range: [f64; 2], cfg: &RunConfig) -> EvalReport {
    let n = episodes.len();
    let (mean_error, std_error) = mean_std(episodes.iter().map(|e| e.error));
    let frac = |f: &dyn Fn(&EpisodeRecord) -> bool| {
        if n == 0 {
            0.0
        } else {
            episodes.iter().filter(|e| f(e)).count() as f64 / n as f64
        }
    };
    let summary = EvalSummary {
        episodes: n,
        mean_error,
        std_error,
        mean_normalized_error: mean_std(episodes.iter().map(|e| e.normalized_error)).0,
        stability_rate: frac(&|e| e.stable),
        release_rate: frac(&|e| e.released),
        max_stable_range: episodes.iter().filter(|e| e.stable).filter_map(|e| e.landing_distance).reduce(f64::max),
        mean_return: mean_std(episodes.iter().map(|e| e.total_reward)).0,
    };

    let w = cfg.eval.distance_bin;
    let lo = (range[0] / w).floor() * w;
    let bins = (((range[1] - lo) / w).floor() as usize + 1).max(1);
    let distance_bins = (0..bins)
        .map(|b| {
            let (blo, bhi) = (lo + b as f64 * w, lo + (b + 1) as f64 * w);
            let inside: Vec<&EpisodeRecord> =
                episodes.iter().filter(|e| e.target.r >= blo && e.target.r < bhi).collect();
            let (m, s) = mean_std(inside.iter().map(|e| e.error));
            let c = inside.len();
            DistanceBin {
                lo: blo,
                hi: bhi,
                count: c,
                mean_error: m,
                std_error: s,
                mean_normalized_error: mean_std(inside.iter().map(|e| e.normalized_error)).0,
                stability_rate: if c == 0 { 0.0 } else { inside.iter().filter(|e| e.stable).count() as f64 / c as f64 },
            }
        })
        .collect();

    let (np, nt) = (cfg.eval.phi_bins, cfg.eval.theta_bins);
    let mut polar = Vec::with_capacity(np * nt);
    for i in 0..np {
        for j in 0..nt {
            let phi = [TAU * i as f64 / np as f64, TAU * (i + 1) as f64 / np as f64];
            let theta = [j as f64 / nt as f64, (j + 1) as f64 / nt as f64];
            let inside: Vec<&EpisodeRecord> = episodes
                .iter()
                .filter(|e| {
                    let pi = ((e.target.phi / TAU * np as f64) as usize).min(np - 1);
                    let ti = ((e.target.theta_tilde * nt as f64) as usize).min(nt - 1);
                    pi == i && ti == j
                })
                .collect();
            polar.push(PolarCell {
                phi,
                theta,
                count: inside.len(),
                mean_error: mean_std(inside.iter().map(|e| e.error)).0,
                mean_normalized_error: mean_std(inside.iter().map(|e| e.normalized_error)).0,
            });
        }
    }
    EvalReport { episodes, summary, distance_bins, polar, range }
}

pub fn write_report(report: &EvalReport, dir: &Path, cfg: &RunConfig, extra: serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut s = String::new();
    writeln!(s, "{EPISODES_HEADER}").ok();
    for e in &report.episodes {
        writeln!(s, "{}", e.csv()).ok();
    }
    std::fs::write(dir.join("episodes.csv"), &s)?;

    s.clear();
    writeln!(s, "{DISTANCE_HEADER}").ok();
    for b in &report.distance_bins {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            b.lo, b.hi, b.count, b.mean_error, b.std_error, b.mean_normalized_error, b.stability_rate
        )
        .ok();
    }
    std::fs::write(dir.join("error_by_distance.csv"), &s)?;

    s.clear();
    writeln!(s, "{POLAR_HEADER}").ok();
    for c in &report.polar {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            c.phi[0], c.phi[1], c.theta[0], c.theta[1], c.count, c.mean_error, c.mean_normalized_error
        )
        .ok();
    }
    std::fs::write(dir.join("polar_grid.csv"), &s)?;

    let summary = serde_json::json!({
        "metrics": report.summary,
        "commanded_range": report.range,
        "config": cfg.resolved(),
        "run": extra,
    });
    std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(())
}

pub fn read_polar_csv(path: &Path) -> Result<Vec<PolarCell>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(POLAR_HEADER) {
        return invalid(format!("{} is not a polar grid file", path.display()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 7 {
                return invalid(format!("bad polar row: {l}"));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| Error::InvalidArgument(format!("{l}: {e}")));
            Ok(PolarCell {
                phi: [num(0)?, num(1)?],
                theta: [num(2)?, num(3)?],
                count: f[4].parse().map_err(|e| Error::InvalidArgument(format!("{l}: {e}")))?,
                mean_error: num(5)?,
                mean_normalized_error: num(6)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarDiff {
    pub phi: [f64; 2],
    pub theta: [f64; 2],
    pub count_a: usize,
    pub count_b: usize,
    pub mean_error_a: f64,
    pub mean_error_b: f64,
    /// `a - b`; negative where `a` is more accurate.
    pub difference: f64,
}

/// Cell-wise `a - b` of two grids with identical binning.
pub fn polar_difference(a: &[PolarCell], b: &[PolarCell]) -> Result<Vec<PolarDiff>> {
    if a.len() != b.len() {
        return invalid(format!("grids differ in size ({} vs {})", a.len(), b.len()));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.phi != y.phi || x.theta != y.theta {
                return invalid("grids use different bins");
            }
            Ok(PolarDiff {
                phi: x.phi,
                theta: x.theta,
                count_a: x.count,
                count_b: y.count,
                mean_error_a: x.mean_error,
                mean_error_b: y.mean_error,
                difference: x.mean_error - y.mean_error,
            })
        })
        .collect()
}

pub fn polar_diff_csv(diff: &[PolarDiff]) -> String {
    let mut s = String::new();
    writeln!(s, "{POLAR_DIFF_HEADER}").ok();
    for d in diff {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            d.phi[0], d.phi[1], d.theta[0], d.theta[1], d.count_a, d.count_b, d.mean_error_a, d.mean_error_b, d.difference
        )
        .ok();
    }
    s
}

/// Fraction of cells populated in both grids where `a` has the lower error.
pub fn fraction_a_better(diff: &[PolarDiff]) -> Option<f64> {
    let both: Vec<&PolarDiff> = diff.iter().filter(|d| d.count_a > 0 && d.count_b > 0).collect();
    (!both.is_empty()).then(|| both.iter().filter(|d| d.difference < 0.0).count() as f64 / both.len() as f64)
}

/// Checks that a checkpoint's layout fits the environment.
pub fn check_policy_layout(policy: &PolicyParams) -> Result<()> {
    if policy.obs_dim() != OBS_DIM || policy.act_dim() != ACT_DIM {
        return Err(Error::Checkpoint(format!(
            "checkpoint is {}->{} but the environment is {OBS_DIM}->{ACT_DIM}",
            policy.obs_dim(),
            policy.act_dim()
        )));
    }
    Ok(())
}
