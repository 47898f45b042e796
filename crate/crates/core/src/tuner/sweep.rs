//! Asynchronous sweep harness.
//!
//! A single coordinator owns the history, asks TPE for suggestions and hands
//! trials to worker threads. Every state change of a trial is appended to
//! `history.jsonl` (last record per id wins), so a killed sweep resumes where
//! it stopped: trials that were still running are marked failed and the
//! remaining budget is filled with fresh trials.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::{Assignment, SearchSpace};
use super::tpe::{suggest, TpeConfig};
use super::{best_trial, objective, TrialRecord, TrialStatus};
use crate::error::{invalid, Error, Result};

pub const HISTORY_FILE: &str = "history.jsonl";
pub const BEST_FILE: &str = "best.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Number of complete trials to collect.
    pub budget: usize,
    pub workers: usize,
    pub seed: u64,
    /// Stop dispatching after this many failures in one session.
    pub max_failures: usize,
    pub tpe: TpeConfig,
    pub space: SearchSpace,
    /// Training iterations per trial when trials run real training.
    pub trial_iterations: u32,
    pub trial_env_count: usize,
    pub trial_eval_episodes: usize,
    /// Artificial per-trial delay in synthetic mode.
    pub synthetic_delay_ms: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            budget: 100,
            workers: 1,
            seed: 0,
            max_failures: 10,
            tpe: TpeConfig::default(),
            space: SearchSpace::default(),
            trial_iterations: 60,
            trial_env_count: 64,
            trial_eval_episodes: 100,
            synthetic_delay_ms: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return invalid("sweep budget must be >= 1");
        }
        if self.workers == 0 {
            return invalid("sweep needs at least one worker");
        }
        self.tpe.validate()?;
        self.space.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub objective: f64,
    pub accuracy: Option<f64>,
    pub stability_rate: Option<f64>,
}

impl TrialOutcome {
    pub fn from_metrics(accuracy: f64, stability_rate: f64) -> Self {
        Self { objective: objective(accuracy, stability_rate), accuracy: Some(accuracy), stability_rate: Some(stability_rate) }
    }
}

pub trait TrialRunner: Sync {
    fn run(&self, id: u64, params: &Assignment) -> Result<TrialOutcome>;
}

impl<F: Fn(u64, &Assignment) -> Result<TrialOutcome> + Sync> TrialRunner for F {
    fn run(&self, id: u64, params: &Assignment) -> Result<TrialOutcome> {
        self(id, params)
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub best: TrialRecord,
    /// One record per trial, by id.
    pub history: Vec<TrialRecord>,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Reads a history file, keeping the last record of every id. Unparseable
/// lines (a write cut short by a kill) are skipped.
pub fn load_history(path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    let mut by_id = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Ok(rec) = serde_json::from_str::<TrialRecord>(line) {
            by_id.insert(rec.id, rec);
        }
    }
    Ok(by_id.into_values().collect())
}

struct Journal {
    path: Option<PathBuf>,
}

impl Journal {
    fn append(&self, rec: &TrialRecord) -> Result<()> {
        let Some(path) = &self.path else { return Ok(()) };
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut line = serde_json::to_string(rec)?;
        line.push('\n');
        f.write_all(line.as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

fn trial_rng(seed: u64, id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ id.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Runs trials until `cfg.budget` of them are complete. With `out_dir`, the
/// history is persisted (and resumed from) and `best.json` is written.
pub fn run_sweep<T: TrialRunner>(cfg: &SweepConfig, runner: &T, out_dir: Option<&Path>) -> Result<SweepResult> {
    cfg.validate()?;
    let journal = Journal { path: out_dir.map(|d| d.join(HISTORY_FILE)) };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut history: BTreeMap<u64, TrialRecord> = match &journal.path {
        Some(p) => load_history(p)?.into_iter().map(|r| (r.id, r)).collect(),
        None => BTreeMap::new(),
    };
    if let Some(p) = journal.path.as_deref().filter(|p| p.exists()) {
        // a write cut short leaves no newline; keep later records off that line
        let bytes = std::fs::read(p)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            OpenOptions::new().append(true).open(p)?.write_all(b"\n")?;
        }
    }
    for rec in history.values_mut().filter(|r| r.status == TrialStatus::Running) {
        rec.status = TrialStatus::Failed;
        rec.error = Some("interrupted".into());
        rec.finished_at = Some(now());
        journal.append(rec)?;
    }
    let count_complete = |h: &BTreeMap<u64, TrialRecord>| h.values().filter(|r| r.status == TrialStatus::Complete).count();
    let mut next_id = history.keys().next_back().map_or(0, |k| k + 1);
    let mut failures = 0usize;

    let (job_tx, job_rx) = mpsc::channel::<(u64, Assignment)>();
    let job_rx = Arc::new(Mutex::new(job_rx));
    let (res_tx, res_rx) = mpsc::channel::<(u64, Result<TrialOutcome>)>();

    std::thread::scope(|scope| -> Result<()> {
        for _ in 0..cfg.workers {
            let job_rx = Arc::clone(&job_rx);
            let res_tx = res_tx.clone();
            scope.spawn(move || loop {
                let job = job_rx.lock().expect("job queue").recv();
                let Ok((id, params)) = job else { break };
                let outcome = catch_unwind(AssertUnwindSafe(|| runner.run(id, &params)))
                    .unwrap_or_else(|_| Err(Error::InvalidArgument("trial panicked".into())));
                if res_tx.send((id, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(res_tx);

        let mut in_flight = 0usize;
        let result = (|| -> Result<()> {
            loop {
                while in_flight < cfg.workers
                    && count_complete(&history) + in_flight < cfg.budget
                    && failures < cfg.max_failures
                {
                    let id = next_id;
                    next_id += 1;
                    let past: Vec<TrialRecord> = history.values().cloned().collect();
                    let params = suggest(&past, &cfg.space, &cfg.tpe, &mut trial_rng(cfg.seed, id))?;
                    let rec = TrialRecord {
                        id,
                        params: params.clone(),
                        status: TrialStatus::Running,
                        objective: None,
                        accuracy: None,
                        stability_rate: None,
                        started_at: now(),
                        finished_at: None,
                        error: None,
                    };
                    journal.append(&rec)?;
                    history.insert(id, rec);
                    job_tx.send((id, params)).map_err(|_| Error::InvalidArgument("workers exited".into()))?;
                    in_flight += 1;
                }
                if in_flight == 0 {
                    return Ok(());
                }
                let (id, outcome) = res_rx.recv().map_err(|_| Error::InvalidArgument("workers exited".into()))?;
                in_flight -= 1;
                let rec = history.get_mut(&id).expect("dispatched trial");
                rec.finished_at = Some(now());
                match outcome {
                    Ok(o) if o.objective.is_finite() => {
                        rec.status = TrialStatus::Complete;
                        rec.objective = Some(o.objective);
                        rec.accuracy = o.accuracy;
                        rec.stability_rate = o.stability_rate;
                    }
                    Ok(o) => {
                        rec.status = TrialStatus::Failed;
                        rec.error = Some(format!("non-finite objective {}", o.objective));
                        failures += 1;
                    }
                    Err(e) => {
                        rec.status = TrialStatus::Failed;
                        rec.error = Some(e.to_string());
                        failures += 1;
                    }
                }
                journal.append(rec)?;
            }
        })();
        drop(job_tx);
        result
    })?;

    let history: Vec<TrialRecord> = history.into_values().collect();
    let best = best_trial(&history)
        .cloned()
        .ok_or_else(|| Error::InvalidArgument(format!("no trial completed ({failures} failed)")))?;
    if let Some(dir) = out_dir {
        let summary = serde_json::json!({
            "best": best,
            "complete_trials": history.iter().filter(|r| r.status == TrialStatus::Complete).count(),
            "failed_trials": history.iter().filter(|r| r.status == TrialStatus::Failed).count(),
        });
        std::fs::write(dir.join(BEST_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(SweepResult { best, history })
}
