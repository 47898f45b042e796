use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use ballista::learner::{checkpoint, PolicyParams};
use ballista::tuner::{load_history, TrialStatus};
use rand::SeedableRng;

fn ballista() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ballista"));
    c.env("BALLISTA_THREADS", "2");
    c
}

fn run(args: &[&str]) -> Output {
    ballista().args(args).output().expect("spawn ballista")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["train", "--mode", "sideways"])), 1);
    assert_eq!(code(&run(&["train", "--envs", "0", "--iterations", "1"])), 1);
    let o = run(&["train", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&o), 1);
    assert!(!o.stderr.is_empty());
}

#[test]
fn init_config_writes_full_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let o = run(&["init-config", "--path", s(&path), "--mode", "arm_only", "--profile", "quadruped"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["mode"], "arm_only");
    assert_eq!(v["profile"], "quadruped");
    assert!(v["plant"].is_object() && v["rewards"].is_object() && v["ppo"].is_object());
    // the written file loads back unchanged
    let again = dir.path().join("again.json");
    assert_eq!(code(&run(&["init-config", "--config", s(&path), "--path", s(&again)])), 0);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn train_smoke_emits_one_curve_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["train", "--iterations", "1", "--envs", "4", "--seed", "3", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let seed_dir = dir.path().join("seed_3");
    let curves = std::fs::read_to_string(seed_dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().count(), 2);
    assert_eq!(curves.lines().next().unwrap(), ballista::train::CURVES_HEADER);
    for f in ["policy.bin", "config.json", "curriculum.csv", "train_summary.json"] {
        assert!(seed_dir.join(f).exists(), "{f}");
    }
}

#[test]
fn same_seed_gives_identical_curves() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = run(&["train", "--iterations", "3", "--envs", "8", "--seed", "11", "--out", s(d.path())]);
        assert_eq!(code(&o), 0);
    }
    let read = |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join("seed_11").join(f)).unwrap();
    assert_eq!(read(&a, "curves.csv"), read(&b, "curves.csv"));
    assert_eq!(read(&a, "policy.bin"), read(&b, "policy.bin"));
}

fn trained_checkpoint(dir: &Path) -> std::path::PathBuf {
    let o = run(&["train", "--iterations", "1", "--envs", "4", "--seed", "0", "--out", s(dir)]);
    assert_eq!(code(&o), 0);
    dir.join("seed_0/policy.bin")
}

#[test]
fn eval_with_zero_episodes_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = trained_checkpoint(dir.path());
    let out = dir.path().join("eval");
    let o = run(&["eval", "--checkpoint", s(&ckpt), "--episodes", "0", "--envs", "4", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["error_by_distance.csv", "polar_grid.csv", "summary.json", "episodes.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["metrics"]["episodes"], 0);
    assert_eq!(summary["config"]["env_count"], 4);
}

#[test]
fn eval_rejects_a_mismatched_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let wrong = PolicyParams::new(10, 6, &[8], 1.0, vec![1.0; 10], &mut rng).unwrap();
    let ckpt = dir.path().join("wrong.bin");
    checkpoint::save(&wrong, &ckpt).unwrap();
    let o = run(&["eval", "--checkpoint", s(&ckpt), "--episodes", "2", "--out", s(dir.path())]);
    assert_ne!(code(&o), 0);
    std::fs::write(&ckpt, b"not a checkpoint").unwrap();
    let o = run(&["eval", "--checkpoint", s(&ckpt), "--episodes", "2", "--out", s(dir.path())]);
    assert_ne!(code(&o), 0);
}

#[test]
fn eval_is_seed_deterministic_and_polar_diff_composes() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = trained_checkpoint(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, mode) in [(&a, "full_body"), (&b, "arm_only")] {
        let o = run(&["eval", "--checkpoint", s(&ckpt), "--episodes", "12", "--envs", "4", "--mode", mode, "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let again = dir.path().join("a2");
    let o = run(&["eval", "--checkpoint", s(&ckpt), "--episodes", "12", "--envs", "4", "--out", s(&again)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(a.join("episodes.csv")).unwrap(), std::fs::read(again.join("episodes.csv")).unwrap());

    let diff = dir.path().join("plots/diff.csv");
    let o = run(&["plot-data", "polar-diff", "--a", s(&a), "--b", s(&b), "--out", s(&diff)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&diff).unwrap();
    assert_eq!(text.lines().next().unwrap(), ballista::eval::POLAR_DIFF_HEADER);
    assert_eq!(text.lines().count(), 1 + 12 * 5);
}

#[test]
fn ballistics_check_passes_and_catches_an_injected_bug() {
    let o = run(&["ballistics-check", "--cases", "100"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
    assert_eq!(code(&run(&["ballistics-check", "--cases", "100", "--inject-bug"])), 3);
}

#[test]
fn synthetic_sweep_with_budget_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--synthetic", "--budget", "1", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let history = load_history(&dir.path().join("sweep/history.jsonl")).unwrap();
    assert_eq!(history.len(), 1);
    let best: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep/best.json")).unwrap()).unwrap();
    assert_eq!(best["best"]["id"], 0);
    assert_eq!(best["complete_trials"], 1);
}

#[test]
fn sweep_resumes_after_the_process_is_killed() {
    let dir = tempfile::tempdir().unwrap();
    let history_path = dir.path().join("sweep/history.jsonl");
    let mut child = ballista()
        .args(["sweep", "--synthetic", "--budget", "12", "--workers", "2", "--delay-ms", "150", "--out", s(dir.path())])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let start = Instant::now();
    loop {
        let done = load_history(&history_path)
            .map(|h| h.iter().filter(|r| r.status == TrialStatus::Complete).count())
            .unwrap_or(0);
        if done >= 3 {
            break;
        }
        assert!(start.elapsed() < Duration::from_secs(30), "sweep made no progress");
        std::thread::sleep(Duration::from_millis(20));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let partial = load_history(&history_path).unwrap();
    assert!(partial.iter().filter(|r| r.status == TrialStatus::Complete).count() < 12);

    let o = run(&["sweep", "--synthetic", "--budget", "12", "--workers", "2", "--out", s(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let history = load_history(&history_path).unwrap();
    assert_eq!(history.iter().filter(|r| r.status == TrialStatus::Complete).count(), 12);
    assert!(history.iter().all(|r| r.status != TrialStatus::Running));
    let mut ids: Vec<u64> = history.iter().map(|r| r.id).collect();
    ids.dedup();
    assert_eq!(ids.len(), history.len());
}
