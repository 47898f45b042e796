use ballista::ballistics::min_distance_bruteforce;
use ballista::curriculum::{CurriculumConfig, CurriculumState, Schedule};
use ballista::env::{
    fixed_schedule, privileged_blend, BatchEnv, EnvConfig, ThrowEnv, ACT_DIM, ESTIMATE_CHANNEL, OBS_DIM,
    RELEASED_CHANNEL, RELEASE_CHANNEL,
};
use ballista::plant::{PlantConfig, RobotProfile, SHOULDER_PITCH};
use ballista::task::{throwing_reward, to_cartesian, RewardConfig, TaskKind};
use proptest::prelude::*;

fn schedule() -> Schedule {
    fixed_schedule(TaskKind::General, [1.0, 5.0], 1.0)
}

fn env(seed: u64) -> ThrowEnv {
    ThrowEnv::new(EnvConfig::default(), PlantConfig::humanoid(), RewardConfig::humanoid(), schedule(), seed)
}

/// Wind up, then swing forward and command release at step `release_at`.
fn swing(step: u32, release_at: u32) -> [f64; ACT_DIM] {
    let mut a = [0.0; ACT_DIM];
    if step < release_at {
        a[SHOULDER_PITCH] = -1.0;
    } else {
        a[SHOULDER_PITCH] = 2.5;
        a[RELEASE_CHANNEL] = 1.5;
    }
    a
}

fn run_episode(env: &mut ThrowEnv, policy: impl Fn(u32) -> [f64; ACT_DIM]) -> (f64, u32) {
    let mut total = 0.0;
    let mut k = 0;
    loop {
        let (_, r, done, _) = env.step(&policy(k)).unwrap();
        total += r;
        k += 1;
        if done {
            return (total, k);
        }
    }
}

#[test]
fn reset_is_deterministic() {
    let (mut a, mut b) = (env(7), env(7));
    assert_eq!(a.last_observation(), b.last_observation());
    assert_eq!(a.reset(&schedule()), b.reset(&schedule()));
}

#[test]
fn humanoid_distance_task_starts_at_four_metres() {
    let c = CurriculumState::new(RobotProfile::Humanoid, TaskKind::Distance, CurriculumConfig::default());
    let mut e = ThrowEnv::new(EnvConfig::default(), PlantConfig::humanoid(), RewardConfig::humanoid(), c.schedule(), 3);
    assert_eq!(e.target().r, 4.0);
    e.reset(&c.schedule());
    assert_eq!(e.target().r, 4.0);
}

#[test]
fn released_flag_is_zero_at_reset() {
    let e = env(1);
    assert_eq!(e.last_observation().to_vec()[RELEASED_CHANNEL], 0.0);
    assert_eq!(e.last_observation().to_vec().len(), OBS_DIM);
}

#[test]
fn sub_threshold_release_never_detaches() {
    let mut e = env(2);
    let (_, steps) = run_episode(&mut e, |_| {
        let mut a = [0.0; ACT_DIM];
        a[RELEASE_CHANNEL] = 0.5;
        a
    });
    let s = e.episode_summary();
    assert_eq!(steps, EnvConfig::default().max_episode_steps);
    assert!(!s.released && s.error.is_none() && s.throwing.is_none());
    assert_eq!(s.stability, 0.0);
}

#[test]
fn detach_follows_release_command_after_delay() {
    let mut e = env(4);
    let dt = EnvConfig::default().control_dt();
    let release_at = 10;
    let mut detach = None;
    for k in 0..40 {
        e.step(&swing(k, release_at)).unwrap();
        if let Some(t) = e.episode_summary().detach_time {
            detach = Some(t);
            break;
        }
    }
    let t_cmd = release_at as f64 * dt;
    let t = detach.expect("ball detached");
    assert!((t - (t_cmd + 0.1)).abs() <= dt + 1e-9, "detach at {t}, command at {t_cmd}");
}

#[test]
fn emitted_throw_matches_brute_force_oracle() {
    for seed in 0..5 {
        let mut e = env(seed);
        let mut emitted = 0;
        let mut throw_reward = 0.0;
        loop {
            let k = e.episode_summary().steps;
            let (_, _, done, info) = e.step(&swing(k, 12)).unwrap();
            if info.throw_emitted {
                emitted += 1;
                throw_reward = info.rewards.throwing;
            }
            if done {
                break;
            }
        }
        let s = *e.episode_summary();
        assert_eq!(emitted, 1);
        let release = s.release.expect("scored release");
        let target = to_cartesian(&s.target).unwrap();
        let oracle = min_distance_bruteforce(&release, target, &e.plant_config().ballistics, 1e-5).unwrap();
        assert!((s.error.unwrap() - oracle).abs() < 1e-4);
        let expect = e.rewards.lambda1 * throwing_reward(oracle, s.target.r).unwrap();
        assert!((throw_reward - expect).abs() < 1e-4 * e.rewards.lambda1);
    }
}

#[test]
fn commands_are_zeroed_after_detach() {
    let (mut a, mut b) = (env(5), env(5));
    let mut k = 0;
    while a.episode_summary().detach_time.is_none() {
        a.step(&swing(k, 8)).unwrap();
        b.step(&swing(k, 8)).unwrap();
        k += 1;
    }
    let detach = a.episode_summary().detach_time.unwrap();
    // run both to 250 ms after detach with the same swing
    while a.time() < detach + 0.25 - 1e-9 {
        a.step(&swing(k, 8)).unwrap();
        b.step(&swing(k, 8)).unwrap();
        k += 1;
    }
    let wild = [2.0, -1.0, 2.0, -2.0, 2.0, 3.0];
    for _ in 0..5 {
        if a.is_done() {
            break;
        }
        a.step(&wild).unwrap();
        b.step(&[0.0; ACT_DIM]).unwrap();
        assert_eq!(a.plant_state().q, b.plant_state().q);
    }
}

#[test]
fn nan_action_faults_the_episode() {
    let mut e = env(6);
    let (_, _, done, info) = e.step(&[f64::NAN; ACT_DIM]).unwrap();
    assert!(done);
    let s = info.summary.unwrap();
    assert!(s.fault);
    assert_eq!(s.stability, 0.0);
    assert!(e.step(&[0.0; ACT_DIM]).is_err());
}

#[test]
fn privileged_channel_fades() {
    let mut e = env(8);
    e.step(&[0.0; ACT_DIM]).unwrap();
    let o = e.observe_at(0);
    assert_eq!(o.estimated_displacement, e.true_estimate());
    assert_eq!(privileged_blend(50, 100), 0.5);
    assert_eq!(privileged_blend(100, 100), 1.0);
    assert_eq!(privileged_blend(400, 100), 1.0);
}

#[test]
fn faded_channel_is_uncorrelated_with_the_estimate() {
    let mut e = env(9);
    let mut pairs = Vec::new();
    let mut k = 0u32;
    // warm the running statistics over a long stretch of episodes
    while pairs.len() < 10_000 {
        if e.is_done() {
            e.reset(&schedule());
        }
        let step = e.episode_summary().steps;
        let action = swing(step, 5 + k % 20);
        e.step(&action).unwrap();
        k += 1;
        if k > 2_000 {
            let o = e.observe_at(100);
            pairs.push((o.estimated_displacement, e.true_estimate()));
        }
    }
    let rho = ballista::train::correlation(&pairs).unwrap();
    assert!(rho.abs() < 0.05, "rho = {rho}");
}

#[test]
fn single_env_batch_equals_single_env() {
    let mut single = env(env_seed_for(11, 0));
    let mut batch = BatchEnv::new(
        1,
        EnvConfig::default(),
        PlantConfig::humanoid(),
        RewardConfig::humanoid(),
        schedule(),
        11,
    );
    for k in 0..60 {
        let a = swing(k, 10);
        let (obs, r, done, _) = single.step(&a).unwrap();
        let out = batch.batch_step(&[a]).unwrap();
        assert_eq!(out.rewards[0], r);
        assert_eq!(out.dones[0], done);
        if done {
            let fresh = single.reset(&schedule());
            assert_eq!(out.observations[0], fresh);
            break;
        }
        assert_eq!(out.observations[0], obs);
    }
}

fn env_seed_for(seed: u64, i: usize) -> u64 {
    ballista::env::env_seed(seed, i)
}

#[test]
fn permuting_envs_permutes_outputs() {
    let n = 16;
    let seeds: Vec<u64> = (0..n as u64).map(|i| 100 + i).collect();
    let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 3) % n).collect();
    let make = |order: &[usize]| BatchEnv {
        envs: order.iter().map(|&i| env(seeds[i])).collect(),
    };
    let mut a = make(&(0..n).collect::<Vec<_>>());
    let mut b = make(&perm);
    for k in 0..30 {
        let actions: Vec<[f64; ACT_DIM]> = (0..n).map(|i| swing(k, 5 + i as u32)).collect();
        let permuted: Vec<[f64; ACT_DIM]> = perm.iter().map(|&i| actions[i]).collect();
        let oa = a.batch_step(&actions).unwrap();
        let ob = b.batch_step(&permuted).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            assert_eq!(ob.observations[j], oa.observations[i]);
            assert_eq!(ob.rewards[j], oa.rewards[i]);
        }
    }
}

#[test]
fn batch_shape_mismatch_is_rejected() {
    let mut b = BatchEnv::new(3, EnvConfig::default(), PlantConfig::humanoid(), RewardConfig::humanoid(), schedule(), 0);
    assert!(b.batch_step(&[[0.0; ACT_DIM]; 2]).is_err());
}

#[test]
fn batch_throughput_smoke() {
    let mut b =
        BatchEnv::new(256, EnvConfig::default(), PlantConfig::humanoid(), RewardConfig::humanoid(), schedule(), 0);
    let actions: Vec<[f64; ACT_DIM]> = (0..256).map(|i| swing(i % 7, 3)).collect();
    let t = std::time::Instant::now();
    let steps = 40;
    for _ in 0..steps {
        b.batch_step(&actions).unwrap();
    }
    let rate = (256 * steps) as f64 / t.elapsed().as_secs_f64();
    println!("{rate:.0} env-steps/s");
    assert!(rate > 50_000.0, "{rate:.0} env-steps/s");
}

#[test]
fn observation_width_is_mode_independent() {
    let arm = EnvConfig { arm_only: true, ..EnvConfig::default() };
    let e = ThrowEnv::new(arm, PlantConfig::humanoid(), RewardConfig::humanoid(), schedule(), 0);
    assert_eq!(e.last_observation().to_vec().len(), env(0).last_observation().to_vec().len());
}

#[test]
fn disabled_channels_read_zero() {
    let mut cfg = EnvConfig::default();
    cfg.observe.estimate_displacement = false;
    cfg.observe.ball_released = false;
    let mut e = ThrowEnv::new(cfg, PlantConfig::humanoid(), RewardConfig::humanoid(), schedule(), 0);
    for k in 0..30 {
        let (o, _, done, _) = e.step(&swing(k, 3)).unwrap();
        let v = o.to_vec();
        assert_eq!((v[ESTIMATE_CHANNEL], v[RELEASED_CHANNEL]), (0.0, 0.0));
        if done {
            break;
        }
    }
}

#[test]
fn trace_is_line_delimited_json() {
    let mut e = env(3);
    e.enable_trace();
    for k in 0..5 {
        e.step(&swing(k, 2)).unwrap();
    }
    let mut buf = Vec::new();
    e.write_trace(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["observation"].as_array().unwrap().len(), OBS_DIM);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn episode_reward_decomposes(seed in 0u64..1000, release_at in 0u32..60, wind in -1.0f64..1.0, push in 0.0f64..3.0) {
        let mut e = env(seed);
        let mut total = 0.0;
        let mut roll = 0.0;
        let mut emitted = 0;
        let mut released_prev = 0.0;
        loop {
            let k = e.episode_summary().steps;
            let mut a = [0.0; ACT_DIM];
            a[SHOULDER_PITCH] = if k < release_at { wind } else { push };
            a[1] = wind * 0.5;
            a[RELEASE_CHANNEL] = if k >= release_at { 1.5 } else { 0.0 };
            let (o, r, done, info) = e.step(&a).unwrap();
            total += r;
            roll += info.rewards.roll;
            emitted += info.throw_emitted as u32;
            let released = o.to_vec()[RELEASED_CHANNEL];
            prop_assert!(released >= released_prev);
            released_prev = released;
            if done {
                break;
            }
        }
        let s = *e.episode_summary();
        let rc = e.rewards;
        prop_assert_eq!(emitted, s.released as u32);
        let expect = rc.lambda1 * s.throwing.unwrap_or(0.0) + rc.lambda2 * s.stability + roll;
        prop_assert!((total - expect).abs() < 1e-9);
        prop_assert!((s.rewards.total - total).abs() < 1e-9);
    }
}
