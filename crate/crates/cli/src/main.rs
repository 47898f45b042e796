//! `ballista`: train, evaluate and tune throwing policies.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical fault,
//! 3 tolerance failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use ballista::config::{ControlMode, RunConfig};
use ballista::eval::{self, check_policy_layout, final_schedule};
use ballista::learner::checkpoint;
use ballista::plant::RobotProfile;
use ballista::task::TaskKind;
use ballista::train::{train_with, CurveRow};
use ballista::tuner::{self, run_sweep, Assignment, TrialOutcome};
use ballista::{oracle, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;

#[derive(Parser)]
#[command(name = "ballista", version, about = "Reinforcement-learning throwing on a reduced full-body thrower")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "arm_only", alias = "arm-only")]
    ArmOnly,
    #[value(name = "full_body", alias = "full-body")]
    FullBody,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Humanoid,
    Quadruped,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Distance,
    General,
}

/// Flags shared by every command that reads a run configuration.
#[derive(Args, Clone)]
struct Common {
    /// JSON run configuration; omitted fields take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use this single seed instead of the configured list
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
    #[arg(long, value_enum)]
    task: Option<TaskArg>,
    #[arg(long)]
    iterations: Option<u32>,
    /// Number of parallel environments
    #[arg(long)]
    envs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(m) = self.mode {
            cfg.mode = match m {
                ModeArg::ArmOnly => ControlMode::ArmOnly,
                ModeArg::FullBody => ControlMode::FullBody,
            };
        }
        if let Some(p) = self.profile {
            let profile = match p {
                ProfileArg::Humanoid => RobotProfile::Humanoid,
                ProfileArg::Quadruped => RobotProfile::Quadruped,
            };
            if profile != cfg.profile {
                // profile-specific defaults must follow the profile
                cfg.plant = None;
                cfg.rewards = None;
            }
            cfg.profile = profile;
        }
        if let Some(t) = self.task {
            cfg.task = match t {
                TaskArg::Distance => TaskKind::Distance,
                TaskArg::General => TaskKind::General,
            };
        }
        if let Some(i) = self.iterations {
            cfg.iterations = i;
        }
        if let Some(e) = self.envs {
            cfg.env_count = e;
        }
        cfg.validate()?;
        Ok(cfg.resolved())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a configuration file with every default filled in
    InitConfig {
        #[command(flatten)]
        common: Common,
        /// Destination file (stdout when omitted)
        #[arg(long = "path")]
        path: Option<PathBuf>,
    },
    /// Train one policy per seed
    Train {
        #[command(flatten)]
        common: Common,
        /// Print a progress line every this many iterations (0 = quiet)
        #[arg(long, default_value_t = 10)]
        log_every: u32,
    },
    /// Evaluate a checkpoint deterministically with domain randomisation on
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Number of evaluation episodes (defaults to the configured count)
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Hyperparameter search with TPE
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        /// Score trials with a cheap synthetic objective instead of training
        #[arg(long)]
        synthetic: bool,
        /// Per-trial delay in synthetic mode
        #[arg(long)]
        delay_ms: Option<u64>,
    },
    /// Compare the throwing error against a brute-force sweep on random cases
    BallisticsCheck {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace the estimator with an unrefined one; the check must fail
        #[arg(long)]
        inject_bug: bool,
    },
    /// Plot-ready data derived from evaluation outputs
    PlotData {
        #[command(subcommand)]
        kind: PlotKind,
    },
}

#[derive(Subcommand)]
enum PlotKind {
    /// Cell-wise error difference `a - b` of two polar grids
    PolarDiff {
        /// Evaluation directory or polar_grid.csv
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Numerical(String),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFault(m) => Failure::Numerical(m),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed_{seed}"))
}

fn cmd_init_config(common: &Common, path: Option<&Path>) -> Result<(), Failure> {
    let cfg = common.config()?;
    match path {
        Some(p) => {
            cfg.save(p)?;
            println!("wrote {}", p.display());
        }
        None => println!("{}", cfg.to_json()),
    }
    Ok(())
}

fn cmd_train(common: &Common, log_every: u32) -> Result<(), Failure> {
    let cfg = common.config()?;
    for &seed in &cfg.seeds {
        let dir = seed_dir(&cfg.output_dir, seed);
        let mut log = |row: &CurveRow| {
            if log_every > 0 && (row.iteration % log_every == 0 || row.iteration + 1 == cfg.iterations) {
                eprintln!(
                    "seed {seed} it {:>5}  reward {:>8.4}  acc {:.3}  stab {:.3}  level {:.2}  kl {:.4}  lr {:.2e}",
                    row.iteration, row.mean_reward, row.accuracy, row.stability_rate, row.level, row.kl, row.lr
                );
            }
        };
        let outcome = train_with(&cfg, seed, Some(&dir), &mut log)?;
        println!(
            "seed {seed}: {} iterations, final level {:.3}, checkpoint {}",
            outcome.curves.len(),
            outcome.curriculum.level,
            dir.join("policy.bin").display()
        );
    }
    Ok(())
}

fn cmd_eval(common: &Common, ckpt: &Path, episodes: Option<usize>) -> Result<(), Failure> {
    let cfg = common.config()?;
    let policy = checkpoint::load(ckpt)?;
    check_policy_layout(&policy)?;
    let seed = cfg.seeds[0].wrapping_add(cfg.eval.seed_offset);
    let n = episodes.unwrap_or(cfg.eval.episodes);
    let schedule = final_schedule(&cfg);
    let report = eval::evaluate(&policy, &cfg, &schedule, n, seed)?;
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.join("eval"));
    let extra = serde_json::json!({ "checkpoint": ckpt, "seed": seed, "episodes": n });
    eval::write_report(&report, &out, &cfg, extra)?;
    let s = &report.summary;
    println!(
        "{} episodes: mean error {:.4} m (±{:.4}), E/r {:.4}, stability {:.3}, release {:.3} -> {}",
        s.episodes,
        s.mean_error,
        s.std_error,
        s.mean_normalized_error,
        s.stability_rate,
        s.release_rate,
        out.display()
    );
    Ok(())
}

fn trial_outcome(base: &RunConfig, id: u64, params: &Assignment) -> ballista::Result<TrialOutcome> {
    let sweep = &base.sweep;
    let mut cfg = base.with_assignment(params)?;
    cfg.iterations = sweep.trial_iterations;
    cfg.env_count = sweep.trial_env_count;
    cfg.validate()?;
    let seed = sweep.seed.wrapping_add(id);
    let outcome = ballista::train::train(&cfg, seed, None)?;
    let report = eval::evaluate(
        &outcome.policy,
        &cfg,
        &final_schedule(&cfg),
        sweep.trial_eval_episodes,
        seed.wrapping_add(cfg.eval.seed_offset),
    )?;
    let accuracy = report.episodes.iter().map(|e| e.throwing).sum::<f64>() / report.episodes.len().max(1) as f64;
    Ok(TrialOutcome::from_metrics(accuracy, report.summary.stability_rate))
}

fn cmd_sweep(
    common: &Common,
    budget: Option<usize>,
    workers: Option<usize>,
    synthetic: bool,
    delay_ms: Option<u64>,
) -> Result<(), Failure> {
    let mut cfg = common.config()?;
    if let Some(b) = budget {
        cfg.sweep.budget = b;
    }
    if let Some(w) = workers {
        cfg.sweep.workers = w;
    }
    if let Some(d) = delay_ms {
        cfg.sweep.synthetic_delay_ms = d;
    }
    if let Some(s) = common.seed {
        cfg.sweep.seed = s;
    }
    cfg.sweep.validate()?;
    let out = cfg.output_dir.join("sweep");
    let result = if synthetic {
        let space = cfg.sweep.space.clone();
        let delay = Duration::from_millis(cfg.sweep.synthetic_delay_ms);
        let runner = move |_id: u64, params: &Assignment| {
            std::thread::sleep(delay);
            Ok(tuner::synthetic_outcome(params, &space))
        };
        run_sweep(&cfg.sweep, &runner, Some(&out))?
    } else {
        let base = cfg.clone();
        let runner = move |id: u64, params: &Assignment| trial_outcome(&base, id, params);
        run_sweep(&cfg.sweep, &runner, Some(&out))?
    };
    let complete = result.history.iter().filter(|t| t.status == tuner::TrialStatus::Complete).count();
    println!(
        "{complete} complete trials; best #{} objective {:.4} -> {}",
        result.best.id,
        result.best.objective.unwrap_or(f64::NAN),
        out.join("best.json").display()
    );
    Ok(())
}

fn cmd_ballistics_check(cases: usize, seed: u64, inject_bug: bool) -> Result<(), Failure> {
    let report = oracle::run(cases, seed, inject_bug)?;
    println!(
        "{} cases: max |dE| = {:.3e} m (tolerance {:.0e}); zero-drag vs vacuum max gap = {:.3e} m",
        report.cases,
        report.max_abs_diff,
        oracle::TOLERANCE,
        report.max_zero_drag_gap
    );
    if report.passed {
        println!("PASS");
        Ok(())
    } else {
        Err(Failure::Tolerance("ballistics oracle disagreement above tolerance".into()))
    }
}

fn polar_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("polar_grid.csv")
    } else {
        p.to_path_buf()
    }
}

fn cmd_plot(kind: &PlotKind) -> Result<(), Failure> {
    match kind {
        PlotKind::PolarDiff { a, b, out } => {
            let ga = eval::read_polar_csv(&polar_path(a))?;
            let gb = eval::read_polar_csv(&polar_path(b))?;
            let diff = eval::polar_difference(&ga, &gb)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(out, eval::polar_diff_csv(&diff))?;
            match eval::fraction_a_better(&diff) {
                Some(f) => println!("a has lower error in {:.1}% of shared cells -> {}", 100.0 * f, out.display()),
                None => println!("no shared populated cells -> {}", out.display()),
            }
            Ok(())
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("BALLISTA_THREADS") {
        let n: usize = v.parse().map_err(|_| Failure::Usage(format!("BALLISTA_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Failure::Usage("BALLISTA_THREADS must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::InitConfig { common, path } => cmd_init_config(common, path.as_deref()),
        Command::Train { common, log_every } => cmd_train(common, *log_every),
        Command::Eval { common, checkpoint, episodes } => cmd_eval(common, checkpoint, *episodes),
        Command::Sweep { common, budget, workers, synthetic, delay_ms } => {
            cmd_sweep(common, *budget, *workers, *synthetic, *delay_ms)
        }
        Command::BallisticsCheck { cases, seed, inject_bug } => cmd_ballistics_check(*cases, *seed, *inject_bug),
        Command::PlotData { kind } => cmd_plot(kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical fault: {m}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        Err(Failure::Tolerance(m)) => {
            eprintln!("tolerance failure: {m}");
            ExitCode::from(EXIT_TOLERANCE)
        }
    }
}
