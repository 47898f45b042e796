use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use ballista::error::Error;
use ballista::tuner::space::names;
use ballista::tuner::{
    load_history, objective, run_sweep, suggest, Assignment, Dimension, Domain, ParamValue, SearchSpace,
    SweepConfig, TpeConfig, TrialOutcome, TrialRecord, TrialStatus,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(id: u64, params: Assignment, objective: f64) -> TrialRecord {
    TrialRecord {
        id,
        params,
        status: TrialStatus::Complete,
        objective: Some(objective),
        accuracy: None,
        stability_rate: None,
        started_at: 0.0,
        finished_at: Some(0.0),
        error: None,
    }
}

fn one_dim(lo: f64, hi: f64) -> SearchSpace {
    SearchSpace { dims: vec![Dimension { name: "x".into(), domain: Domain::Continuous { lo, hi } }] }
}

fn x_of(a: &Assignment) -> f64 {
    a["x"].as_f64().unwrap()
}

fn single(x: f64) -> Assignment {
    [("x".to_string(), ParamValue::Float(x))].into()
}

#[test]
fn startup_phase_samples_within_bounds() {
    let space = SearchSpace::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let history: Vec<_> = (0..3).map(|i| record(i, space.sample_uniform(&mut rng), i as f64)).collect();
    for _ in 0..200 {
        let a = suggest(&history, &space, &TpeConfig::default(), &mut rng).unwrap();
        assert!(space.contains(&a));
        assert_eq!(a[names::GRU], ParamValue::Bool(false));
    }
}

#[test]
fn quadratic_suggestions_concentrate_near_optimum() {
    let space = one_dim(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let history: Vec<_> = (0..50)
        .map(|i| {
            let x: f64 = rng.random();
            record(i, single(x), -(x - 0.3).powi(2))
        })
        .collect();
    let inside = (0..100)
        .filter(|_| {
            let x = x_of(&suggest(&history, &space, &TpeConfig::default(), &mut rng).unwrap());
            (0.1..=0.5).contains(&x)
        })
        .count();
    assert!(inside >= 80, "{inside}/100 in [0.1, 0.5]");
}

#[test]
fn dominant_boolean_is_preferred() {
    let space = SearchSpace {
        dims: vec![
            Dimension { name: "x".into(), domain: Domain::Continuous { lo: 0.0, hi: 1.0 } },
            Dimension { name: "b".into(), domain: Domain::Boolean },
        ],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let history: Vec<_> = (0..40)
        .map(|i| {
            let b = rng.random_bool(0.5);
            let x: f64 = rng.random();
            let params: Assignment = [("x".into(), ParamValue::Float(x)), ("b".into(), ParamValue::Bool(b))].into();
            record(i, params, if b { 1.0 + 0.1 * x } else { 0.1 * x })
        })
        .collect();
    let trues = (0..1000)
        .filter(|_| suggest(&history, &space, &TpeConfig::default(), &mut rng).unwrap()["b"] == ParamValue::Bool(true))
        .count();
    assert!(trues > 500, "{trues}/1000");
}

/// Largest gap between the empirical CDF of `xs` and the uniform CDF on [0, 1].
fn ks_uniform(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn constant_objective_keeps_suggestions_uniform() {
    let space = one_dim(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let history: Vec<_> = (0..30).map(|i| record(i, single(rng.random()), 0.5)).collect();
    let xs: Vec<f64> =
        (0..1000).map(|_| x_of(&suggest(&history, &space, &TpeConfig::default(), &mut rng).unwrap())).collect();
    // critical value at alpha = 0.01
    let d = ks_uniform(xs);
    assert!(d < 1.628 / 1000f64.sqrt(), "D = {d}");
}

#[test]
fn ks_statistic_detects_skew() {
    let xs: Vec<f64> = (0..1000).map(|i| (i as f64 / 1000.0).powi(2)).collect();
    assert!(ks_uniform(xs) > 0.2);
    let even: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    assert!(ks_uniform(even) < 1e-3);
}

#[test]
fn objective_examples() {
    assert!((objective(0.8, 0.9) - 1.55).abs() < 1e-12);
    assert_eq!(objective(0.0, 0.0), 0.0);
    assert!((objective(0.5, 0.6) - 1.1).abs() < 1e-12);
}

proptest! {
    #[test]
    fn objective_is_monotone_and_clipped(a in 0.0f64..1.0, b in 0.0f64..1.0, da in 0.0f64..0.5, db in 0.0f64..0.5) {
        prop_assert!(objective(a + da, b) >= objective(a, b));
        prop_assert!(objective(a, b + db) >= objective(a, b));
        let hi = 0.75 + b * 0.25;
        prop_assert_eq!(objective(a, hi), objective(a, 0.75));
    }

    #[test]
    fn suggestions_stay_in_bounds(seed in 0u64..10_000, n in 0usize..40) {
        let space = SearchSpace::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let history: Vec<_> = (0..n as u64).map(|i| record(i, space.sample_uniform(&mut rng), rng.random())).collect();
        let a = suggest(&history, &space, &TpeConfig::default(), &mut rng).unwrap();
        prop_assert!(space.contains(&a));
        for d in &space.dims {
            if d.domain == Domain::Boolean {
                prop_assert!(a[&d.name].as_bool().is_some());
            }
        }
    }
}

fn sphere_space() -> SearchSpace {
    let c = |name: &str| Dimension { name: name.into(), domain: Domain::Continuous { lo: -5.0, hi: 5.0 } };
    SearchSpace { dims: vec![c("x"), c("y")] }
}

fn sphere(a: &Assignment) -> f64 {
    a.values().map(|v| v.as_f64().unwrap().powi(2)).sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

#[test]
fn tpe_beats_random_search_on_sphere() {
    let space = sphere_space();
    let (mut tpe_gaps, mut random_gaps) = (Vec::new(), Vec::new());
    for rep in 0..20u64 {
        let cfg = SweepConfig { budget: 60, seed: rep, space: space.clone(), ..SweepConfig::default() };
        let runner = |_: u64, a: &Assignment| -> ballista::error::Result<TrialOutcome> {
            Ok(TrialOutcome { objective: -sphere(a), accuracy: None, stability_rate: None })
        };
        let res = run_sweep(&cfg, &runner, None).unwrap();
        tpe_gaps.push(-res.best.objective.unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + rep);
        random_gaps.push((0..60).map(|_| sphere(&space.sample_uniform(&mut rng))).fold(f64::INFINITY, f64::min));
    }
    let (t, r) = (median(tpe_gaps), median(random_gaps));
    println!("median gap: tpe {t:.4}, random {r:.4}");
    assert!(t <= 0.8 * r, "tpe {t} vs random {r}");
}

fn synthetic(_: u64, a: &Assignment) -> ballista::error::Result<TrialOutcome> {
    Ok(TrialOutcome { objective: -sphere(a), accuracy: None, stability_rate: None })
}

#[test]
fn budget_one_runs_exactly_one_trial() {
    let cfg = SweepConfig { budget: 1, workers: 4, space: sphere_space(), ..SweepConfig::default() };
    let calls = AtomicUsize::new(0);
    let runner = |id: u64, a: &Assignment| {
        calls.fetch_add(1, Ordering::SeqCst);
        synthetic(id, a)
    };
    let res = run_sweep(&cfg, &runner, None).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 1);
    assert_eq!(res.history.len(), 1);
    assert_eq!(res.best, res.history[0]);
}

#[test]
fn resume_after_interrupt_completes_budget_without_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let space = sphere_space();
    let first = SweepConfig { budget: 4, workers: 2, space: space.clone(), ..SweepConfig::default() };
    run_sweep(&first, &synthetic, Some(dir.path())).unwrap();

    // a trial in flight and a half-written line, as left by a kill
    let path = dir.path().join(ballista::tuner::sweep::HISTORY_FILE);
    let mut running = record(4, space.sample_uniform(&mut ChaCha8Rng::seed_from_u64(9)), 0.0);
    running.status = TrialStatus::Running;
    running.objective = None;
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str(&serde_json::to_string(&running).unwrap());
    text.push_str("\n{\"id\":5,\"par");
    std::fs::write(&path, text).unwrap();

    let second = SweepConfig { budget: 10, workers: 3, ..first };
    let res = run_sweep(&second, &synthetic, Some(dir.path())).unwrap();
    let history = load_history(&path).unwrap();
    assert_eq!(history, res.history);
    let complete: Vec<_> = history.iter().filter(|r| r.status == TrialStatus::Complete).collect();
    assert_eq!(complete.len(), 10);
    let ids: BTreeSet<u64> = history.iter().map(|r| r.id).collect();
    assert_eq!(ids.len(), history.len());
    let interrupted = history.iter().find(|r| r.id == 4).unwrap();
    assert_eq!(interrupted.status, TrialStatus::Failed);
    assert_eq!(interrupted.error.as_deref(), Some("interrupted"));

    let best: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("best.json")).unwrap()).unwrap();
    assert_eq!(best["complete_trials"], 10);
    assert_eq!(best["best"]["id"], res.best.id);
}

#[test]
fn failed_trials_are_recorded_and_the_sweep_continues() {
    let cfg = SweepConfig { budget: 6, workers: 2, space: sphere_space(), ..SweepConfig::default() };
    let runner = |id: u64, a: &Assignment| match id % 3 {
        0 => Err(Error::NumericalFault("diverged".into())),
        1 if id == 1 => panic!("worker crash"),
        _ => synthetic(id, a),
    };
    let res = run_sweep(&cfg, &runner, None).unwrap();
    let complete = res.history.iter().filter(|r| r.status == TrialStatus::Complete).count();
    let failed: Vec<_> = res.history.iter().filter(|r| r.status == TrialStatus::Failed).collect();
    assert_eq!(complete, 6);
    assert!(failed.iter().any(|r| r.id == 0 && r.error.as_deref().unwrap().contains("diverged")));
    assert!(failed.iter().any(|r| r.id == 1));
    assert_eq!(res.best.status, TrialStatus::Complete);
}

#[test]
fn all_failures_stop_after_the_limit() {
    let cfg = SweepConfig { budget: 5, max_failures: 3, space: sphere_space(), ..SweepConfig::default() };
    let calls = AtomicUsize::new(0);
    let runner = |_: u64, _: &Assignment| -> ballista::error::Result<TrialOutcome> {
        calls.fetch_add(1, Ordering::SeqCst);
        Ok(TrialOutcome { objective: f64::NAN, accuracy: None, stability_rate: None })
    };
    assert!(run_sweep(&cfg, &runner, None).is_err());
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn zero_budget_is_rejected() {
    let cfg = SweepConfig { budget: 0, ..SweepConfig::default() };
    assert!(run_sweep(&cfg, &synthetic, None).is_err());
}
