//! Training driver: collect, GAE, update, curriculum, repeat.
//!
//! Output directory layout:
//!
//! - `config.json`: the resolved configuration
//! - `curves.csv`: one row per iteration (see [`CURVES_HEADER`])
//! - `curriculum.csv`: curriculum state after every iteration
//! - `checkpoint_NNNNN.bin`: periodic checkpoints; `policy.bin`: final policy
//! - `policy_abort.bin`: last finite policy if training hit a numerical fault
//! - `train_summary.json`: final curriculum state and privileged-channel statistics

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::curriculum::{final_distance_ramp, update, CurriculumState, IterationMetrics};
use crate::env::{BatchEnv, EpisodeSummary, Observation, ACT_DIM, OBS_DIM};
use crate::error::{Error, Result};
use crate::learner::{checkpoint, PolicyParams, Ppo, UpdateStats};

pub const CURVES_HEADER: &str =
    "iteration,mean_reward,accuracy,stability_rate,kl,lr,level,episodes,mean_normalized_error,clip_frac,value_loss";

/// Privileged-channel samples are gathered once the fade is complete, up to this many.
const PRIVILEGED_SAMPLE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iteration: u32,
    /// Mean return of episodes finished this iteration.
    pub mean_reward: f64,
    pub accuracy: f64,
    pub stability_rate: f64,
    pub kl: f64,
    pub lr: f64,
    pub level: f64,
    pub episodes: usize,
    pub mean_normalized_error: f64,
    pub clip_frac: f64,
    pub value_loss: f64,
}

impl CurveRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.mean_reward,
            self.accuracy,
            self.stability_rate,
            self.kl,
            self.lr,
            self.level,
            self.episodes,
            self.mean_normalized_error,
            self.clip_frac,
            self.value_loss
        )
    }
}

/// Metrics over the episodes that finished in one iteration. Episodes that
/// never released count as zero accuracy and full normalised error.
pub fn iteration_metrics(episodes: &[EpisodeSummary]) -> (IterationMetrics, f64, f64) {
    if episodes.is_empty() {
        return (IterationMetrics { mean_accuracy: 0.0, stability_rate: 0.0 }, 0.0, 1.0);
    }
    let n = episodes.len() as f64;
    let accuracy = episodes.iter().map(|e| e.throwing.unwrap_or(0.0)).sum::<f64>() / n;
    let stability = episodes.iter().map(|e| e.stability).sum::<f64>() / n;
    let reward = episodes.iter().map(|e| e.rewards.total).sum::<f64>() / n;
    let err = episodes.iter().map(|e| e.normalized_error().unwrap_or(1.0).min(1.0)).sum::<f64>() / n;
    (IterationMetrics { mean_accuracy: accuracy, stability_rate: stability }, reward, err)
}

/// Pearson correlation; `None` when either side is constant or too short.
pub fn correlation(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 3 {
        return None;
    }
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub iterations: u32,
    pub final_level: f64,
    pub final_lr: f64,
    /// Correlation between the privileged channel and the true estimate after the fade.
    pub privileged_correlation: Option<f64>,
    pub privileged_samples: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: PolicyParams,
    pub curves: Vec<CurveRow>,
    pub curriculum: CurriculumState,
    pub summary: TrainSummary,
}

pub fn policy_seed_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn build_policy(cfg: &RunConfig, seed: u64) -> Result<PolicyParams> {
    let scale = Observation::input_scale().iter().map(|v| *v as f32).collect();
    PolicyParams::new(OBS_DIM, ACT_DIM, &cfg.ppo.hidden, cfg.ppo.init_std, scale, &mut policy_seed_rng(seed))
}

struct Outputs {
    dir: PathBuf,
    curves: BufWriter<File>,
    curriculum: BufWriter<File>,
}

impl Outputs {
    fn create(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        cfg.save(&dir.join("config.json"))?;
        let mut curves = BufWriter::new(File::create(dir.join("curves.csv"))?);
        writeln!(curves, "{CURVES_HEADER}")?;
        let mut curriculum = BufWriter::new(File::create(dir.join("curriculum.csv"))?);
        writeln!(curriculum, "{}", CurriculumState::CSV_HEADER)?;
        Ok(Self { dir: dir.to_path_buf(), curves, curriculum })
    }

    fn row(&mut self, row: &CurveRow, state: &CurriculumState) -> Result<()> {
        writeln!(self.curves, "{}", row.csv())?;
        writeln!(self.curriculum, "{}", state.csv_row())?;
        self.curves.flush()?;
        self.curriculum.flush()?;
        Ok(())
    }
}

pub fn train(cfg: &RunConfig, seed: u64, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    train_with(cfg, seed, out_dir, &mut |_| {})
}

/// Trains one seed. `progress` sees every curve row as it is produced.
pub fn train_with(
    cfg: &RunConfig,
    seed: u64,
    out_dir: Option<&Path>,
    progress: &mut dyn FnMut(&CurveRow),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let cfg = cfg.resolved();
    let plant = cfg.plant_config();
    let rewards = cfg.reward_config();
    let mut outputs = out_dir.map(|d| Outputs::create(d, &cfg)).transpose()?;

    let mut curriculum = CurriculumState::new(cfg.profile, cfg.task, cfg.curriculum);
    let mut envs = BatchEnv::new(cfg.env_count, cfg.env, plant, rewards, curriculum.schedule(), seed);
    let mut ppo = Ppo::new(build_policy(&cfg, seed)?, cfg.ppo.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0005_EED0_F00D);
    let mut curves = Vec::with_capacity(cfg.iterations as usize);
    let mut privileged = Vec::new();

    for it in 0..cfg.iterations {
        envs.set_schedule(curriculum.schedule());
        let last_good = ppo.policy.clone();
        let (rollout, stats): (_, UpdateStats) = match ppo.iterate(&mut envs, &mut rng) {
            Ok(r) => r,
            Err(e @ Error::NumericalFault(_)) => {
                if let Some(o) = &outputs {
                    checkpoint::save(&last_good, &o.dir.join("policy_abort.bin"))?;
                }
                return Err(Error::NumericalFault(format!("iteration {it}: {e}")));
            }
            Err(e) => return Err(e),
        };

        if u64::from(it) >= u64::from(cfg.env.privileged_fade_iters) && privileged.len() < PRIVILEGED_SAMPLE_CAP {
            for env in &envs.envs {
                privileged.push((env.last_observation().estimated_displacement, env.true_estimate()));
            }
        }

        let (metrics, mean_reward, mean_err) = iteration_metrics(&rollout.episodes);
        curriculum = update(&curriculum, &metrics);
        curriculum = final_distance_ramp(&curriculum, cfg.iterations - it);

        let row = CurveRow {
            iteration: it,
            mean_reward,
            accuracy: metrics.mean_accuracy,
            stability_rate: metrics.stability_rate,
            kl: stats.kl,
            lr: stats.learning_rate,
            level: curriculum.level,
            episodes: rollout.episodes.len(),
            mean_normalized_error: mean_err,
            clip_frac: stats.clip_frac,
            value_loss: stats.value_loss,
        };
        progress(&row);
        if let Some(o) = outputs.as_mut() {
            o.row(&row, &curriculum)?;
            if cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 {
                checkpoint::save(&ppo.policy, &o.dir.join(format!("checkpoint_{:05}.bin", it + 1)))?;
            }
        }
        curves.push(row);
    }

    let summary = TrainSummary {
        seed,
        iterations: cfg.iterations,
        final_level: curriculum.level,
        final_lr: ppo.learning_rate,
        privileged_correlation: correlation(&privileged),
        privileged_samples: privileged.len(),
    };
    if let Some(o) = &outputs {
        checkpoint::save(&ppo.policy, &o.dir.join("policy.bin"))?;
        std::fs::write(o.dir.join("train_summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(TrainOutcome { policy: ppo.policy, curves, curriculum, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlation_of_linear_data() {
        let pairs: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((correlation(&pairs).unwrap() - 1.0).abs() < 1e-12);
        assert!(correlation(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]).is_none());
    }

    #[test]
    fn empty_iteration_metrics() {
        let (m, r, e) = iteration_metrics(&[]);
        assert_eq!((m.mean_accuracy, m.stability_rate, r, e), (0.0, 0.0, 0.0, 1.0));
    }
}
