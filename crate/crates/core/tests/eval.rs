use ballista::ballistics::min_distance_bruteforce;
use ballista::config::RunConfig;
use ballista::env::{env_seed, ThrowEnv, ACT_DIM, OBS_DIM, RELEASE_CHANNEL};
use ballista::eval::{self, evaluate, final_schedule, eval_targets, Controller};
use ballista::learner::checkpoint;
use ballista::plant::SHOULDER_PITCH;
use ballista::task::to_cartesian;
use ballista::train::train;

/// Hard-coded throw: swing the shoulder forward and release straight away.
struct Scripted;

const THROW: [f64; ACT_DIM] = {
    let mut a = [0.0; ACT_DIM];
    a[SHOULDER_PITCH] = 2.5;
    a[RELEASE_CHANNEL] = 1.5;
    a
};

impl Controller for Scripted {
    fn act_batch(&self, obs: &[f64]) -> Vec<f64> {
        assert_eq!(obs.len() % OBS_DIM, 0);
        (0..obs.len() / OBS_DIM).flat_map(|_| THROW).collect()
    }
}

fn small_config() -> RunConfig {
    RunConfig { env_count: 8, iterations: 2, ..RunConfig::default() }.resolved()
}

#[test]
fn scripted_policy_error_matches_env_internal_error() {
    let cfg = small_config();
    let schedule = final_schedule(&cfg);
    let seed = 17;
    let n = 20;
    let report = evaluate(&Scripted, &cfg, &schedule, n, seed).unwrap();
    assert_eq!(report.episodes.len(), n);
    let targets = eval_targets(&schedule, n, seed);
    let plant = cfg.plant_config();
    for (k, rec) in report.episodes.iter().enumerate() {
        let mut env = ThrowEnv::new(cfg.env, plant.clone(), cfg.reward_config(), schedule, env_seed(seed, k));
        env.reset_to_target(&schedule, targets[k]).unwrap();
        while !env.is_done() {
            env.step(&THROW).unwrap();
        }
        let s = env.episode_summary();
        assert!(rec.released && s.released);
        assert!((rec.error - s.error.unwrap()).abs() < 1e-6);
        let release = s.release.unwrap();
        let oracle =
            min_distance_bruteforce(&release, to_cartesian(&s.target).unwrap(), &plant.ballistics, 1e-5).unwrap();
        assert!((rec.error - oracle).abs() < 1e-4);
    }
}

#[test]
fn zero_episodes_gives_an_empty_report() {
    let cfg = small_config();
    let report = evaluate(&Scripted, &cfg, &final_schedule(&cfg), 0, 0).unwrap();
    assert!(report.episodes.is_empty());
    assert_eq!(report.summary.episodes, 0);
    assert!(report.distance_bins.iter().all(|b| b.count == 0));
    let dir = tempfile::tempdir().unwrap();
    eval::write_report(&report, dir.path(), &cfg, serde_json::Value::Null).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("error_by_distance.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), eval::DISTANCE_HEADER);
}

#[test]
fn distance_bins_cover_the_commanded_range() {
    let cfg = small_config();
    let schedule = final_schedule(&cfg);
    let report = evaluate(&Scripted, &cfg, &schedule, 40, 3).unwrap();
    let bins = &report.distance_bins;
    assert!(bins.first().unwrap().lo <= report.range[0]);
    assert!(bins.last().unwrap().hi > report.range[1]);
    assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 40);
    assert_eq!(report.polar.iter().map(|c| c.count).sum::<usize>(), 40);
    assert_eq!(report.polar.len(), cfg.eval.phi_bins * cfg.eval.theta_bins);
}

#[test]
fn checkpoint_round_trip_reproduces_evaluation() {
    let cfg = small_config();
    let outcome = train(&cfg, 5, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.bin");
    checkpoint::save(&outcome.policy, &path).unwrap();
    let loaded = checkpoint::load(&path).unwrap();
    let schedule = final_schedule(&cfg);
    let a = evaluate(&outcome.policy, &cfg, &schedule, 24, 9).unwrap();
    let b = evaluate(&loaded, &cfg, &schedule, 24, 9).unwrap();
    assert_eq!(a.episodes, b.episodes);
    assert_eq!(a.summary, b.summary);
}

#[test]
fn evaluation_is_independent_of_batch_width() {
    let cfg = small_config();
    let wide = RunConfig { env_count: 64, ..cfg.clone() };
    let schedule = final_schedule(&cfg);
    let a = evaluate(&Scripted, &cfg, &schedule, 30, 1).unwrap();
    let b = evaluate(&Scripted, &wide, &schedule, 30, 1).unwrap();
    assert_eq!(a.episodes, b.episodes);
}

#[test]
fn polar_difference_of_identical_grids_is_zero() {
    let cfg = small_config();
    let report = evaluate(&Scripted, &cfg, &final_schedule(&cfg), 60, 2).unwrap();
    let diff = eval::polar_difference(&report.polar, &report.polar).unwrap();
    assert!(diff.iter().all(|d| d.difference == 0.0 || d.difference.is_nan()));
    assert_eq!(eval::polar_diff_csv(&diff).lines().next().unwrap(), eval::POLAR_DIFF_HEADER);
}
