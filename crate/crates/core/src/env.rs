//! Throwing MDP on top of the reduced plant.
//!
//! Control runs at 50 Hz with four physics sub-steps. A release command
//! (release channel > 1) latches; the ball detaches 100 ms later and flies
//! ballistically. The throwing reward is emitted once, at the first control
//! step where the ball is at least `detach_threshold` from the hand, using the
//! predicted flight rather than waiting for the ball to land. Commands are
//! replaced by the home pose 250 ms after detach.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ballistics::{displacement_error, landing_point, ReleaseState};
use crate::curriculum::Schedule;
use crate::error::{invalid, Result};
use crate::learner::{VecStep, VectorEnv};
use crate::math::Vec3;
use crate::plant::{
    self, end_effector_state, MotorCommand, PlantConfig, PlantState, BODY_JOINTS, CROUCH, NUM_JOINTS,
};
use crate::task::{
    roll_penalty, sample_target, stability_reward, throwing_reward, to_cartesian, RewardBreakdown, RewardConfig,
    TargetCommand, TaskKind, TaskMode,
};

pub const OBS_DIM: usize = 26;
pub const ACT_DIM: usize = 6;
pub const RELEASE_CHANNEL: usize = 5;
/// Index of the privileged displacement estimate in the flat observation.
pub const ESTIMATE_CHANNEL: usize = 23;
pub const RELEASED_CHANNEL: usize = 22;
pub const ROLL_CHANNEL: usize = 24;
pub const FOOT_PITCH_CHANNEL: usize = 25;

const TIME_EPS: f64 = 1e-9;

/// Optional observation channels. A disabled channel is held at zero so the
/// observation width never changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObsToggles {
    /// The reduced plant has no feet; this channel only ever carries zero.
    pub foot_pitch: bool,
    pub body_roll: bool,
    pub estimate_displacement: bool,
    pub ball_released: bool,
}

impl Default for ObsToggles {
    fn default() -> Self {
        Self { foot_pitch: false, body_roll: false, estimate_displacement: true, ball_released: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub control_hz: f64,
    pub decimation: u32,
    pub release_delay: f64,
    pub post_release_zero_delay: f64,
    pub max_episode_steps: u32,
    pub privileged_fade_iters: u32,
    /// Mask body actions and freeze the body joints.
    pub arm_only: bool,
    pub observe: ObsToggles,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            control_hz: 50.0,
            decimation: 4,
            release_delay: 0.1,
            post_release_zero_delay: 0.25,
            max_episode_steps: 200,
            privileged_fade_iters: 100,
            arm_only: false,
            observe: ObsToggles::default(),
        }
    }
}

impl EnvConfig {
    pub fn control_dt(&self) -> f64 {
        1.0 / self.control_hz
    }

    pub fn validate(&self, plant: &PlantConfig) -> Result<()> {
        if !(self.control_hz > 0.0) || self.decimation == 0 || self.max_episode_steps == 0 {
            return invalid("control rate, decimation and episode length must be positive");
        }
        if !(self.release_delay >= 0.0 && self.post_release_zero_delay >= 0.0) {
            return invalid("release delays must be >= 0");
        }
        let implied = self.control_dt() / self.decimation as f64;
        if (implied - plant.physics_dt).abs() > 1e-12 {
            return invalid(format!(
                "control period / decimation = {implied} does not match physics dt {}",
                plant.physics_dt
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub base_lin_vel: [f64; 3],
    pub command: [f64; 3],
    pub joint_pos: [f64; NUM_JOINTS],
    pub joint_vel: [f64; NUM_JOINTS],
    pub prev_action: [f64; ACT_DIM],
    pub ball_released: f64,
    pub estimated_displacement: f64,
    pub body_roll: f64,
    pub foot_pitch: f64,
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(OBS_DIM);
        v.extend_from_slice(&self.base_lin_vel);
        v.extend_from_slice(&self.command);
        v.extend_from_slice(&self.joint_pos);
        v.extend_from_slice(&self.joint_vel);
        v.extend_from_slice(&self.prev_action);
        v.push(self.ball_released);
        v.push(self.estimated_displacement);
        v.push(self.body_roll);
        v.push(self.foot_pitch);
        v
    }

    /// Fixed per-channel scaling applied before the policy network.
    pub fn input_scale() -> [f64; OBS_DIM] {
        let mut s = [1.0; OBS_DIM];
        s[4] = 1.0 / std::f64::consts::PI;
        s[5] = 0.2;
        for v in &mut s[11..16] {
            *v = 0.1;
        }
        s[ESTIMATE_CHANNEL] = 0.2;
        s[ROLL_CHANNEL] = 5.0;
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub target: TargetCommand,
    /// The ball left the hand.
    pub released: bool,
    pub detach_time: Option<f64>,
    /// Ball state when the throw was scored.
    pub release: Option<ReleaseState>,
    /// Throwing error `E`; only defined once released.
    pub error: Option<f64>,
    pub throwing: Option<f64>,
    /// Horizontal distance from the robot origin to the predicted landing point.
    pub landing_distance: Option<f64>,
    pub min_base_height: f64,
    pub max_base_height: f64,
    pub height_bounds: [f64; 2],
    pub max_abs_tilt: f64,
    pub fell: bool,
    pub fault: bool,
    pub stability: f64,
    pub steps: u32,
    pub rewards: RewardBreakdown,
}

impl EpisodeSummary {
    fn new(target: TargetCommand, h: f64, height_bounds: [f64; 2]) -> Self {
        Self {
            target,
            released: false,
            detach_time: None,
            release: None,
            error: None,
            throwing: None,
            landing_distance: None,
            min_base_height: h,
            max_base_height: h,
            height_bounds,
            max_abs_tilt: 0.0,
            fell: false,
            fault: false,
            stability: 0.0,
            steps: 0,
            rewards: RewardBreakdown::default(),
        }
    }

    pub fn normalized_error(&self) -> Option<f64> {
        self.error.map(|e| e / self.target.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    /// Reward terms contributed at this step (already weighted).
    pub rewards: RewardBreakdown,
    pub throw_emitted: bool,
    pub summary: Option<EpisodeSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub episode: u64,
    pub step: u32,
    pub observation: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
}

/// Running mean/variance of the true displacement estimate.
#[derive(Debug, Clone, Copy, Default)]
struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }
}

/// Blend factor of the privileged channel: 0 at iteration 0, 1 from `fade_iters` on.
pub fn privileged_blend(iteration: u64, fade_iters: u32) -> f64 {
    if fade_iters == 0 {
        1.0
    } else {
        (iteration as f64 / fade_iters as f64).min(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct ThrowEnv {
    pub config: EnvConfig,
    pub rewards: RewardConfig,
    nominal_plant: PlantConfig,
    plant_cfg: PlantConfig,
    state: PlantState,
    rng: ChaCha8Rng,
    schedule: Schedule,
    target: TargetCommand,
    target_pos: Vec3,
    step_count: u32,
    prev_action: [f64; ACT_DIM],
    latch_time: Option<f64>,
    detach_time: Option<f64>,
    emitted: bool,
    done: bool,
    summary: EpisodeSummary,
    estimate: f64,
    estimate_stats: RunningStats,
    last_obs: Observation,
    episode_index: u64,
    trace: Option<Vec<TraceRecord>>,
}

impl ThrowEnv {
    pub fn new(config: EnvConfig, plant: PlantConfig, rewards: RewardConfig, schedule: Schedule, seed: u64) -> Self {
        let mut nominal_plant = plant;
        nominal_plant.body_locked = config.arm_only;
        let state = PlantState::at_rest(&nominal_plant);
        let target = TargetCommand { theta_tilde: 0.0, phi: 0.0, r: schedule.task.distance_range[0] };
        let h = state.base_height();
        let mut env = Self {
            config,
            rewards,
            plant_cfg: nominal_plant.clone(),
            summary: EpisodeSummary::new(target, h, nominal_plant.safe_height),
            nominal_plant,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            schedule,
            target,
            target_pos: Vec3::new(target.r, 0.0, 0.0),
            step_count: 0,
            prev_action: [0.0; ACT_DIM],
            latch_time: None,
            detach_time: None,
            emitted: false,
            done: true,
            estimate: 0.0,
            estimate_stats: RunningStats::default(),
            last_obs: Observation {
                base_lin_vel: [0.0; 3],
                command: [0.0; 3],
                joint_pos: [0.0; NUM_JOINTS],
                joint_vel: [0.0; NUM_JOINTS],
                prev_action: [0.0; ACT_DIM],
                ball_released: 0.0,
                estimated_displacement: 0.0,
                body_roll: 0.0,
                foot_pitch: 0.0,
            },
            episode_index: 0,
            trace: None,
        };
        env.reset_with(&schedule);
        env.episode_index = 0;
        env
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    /// Writes the recorded trace as one JSON object per line.
    pub fn write_trace<W: Write>(&self, mut out: W) -> Result<()> {
        for rec in self.trace.iter().flatten() {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn set_schedule(&mut self, schedule: Schedule) {
        self.schedule = schedule;
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn plant_state(&self) -> &PlantState {
        &self.state
    }

    pub fn plant_config(&self) -> &PlantConfig {
        &self.plant_cfg
    }

    pub fn target(&self) -> TargetCommand {
        self.target
    }

    pub fn target_position(&self) -> Vec3 {
        self.target_pos
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn time(&self) -> f64 {
        self.step_count as f64 * self.config.control_dt()
    }

    pub fn last_observation(&self) -> &Observation {
        &self.last_obs
    }

    /// The current ballistic estimate of `E` (no fade applied).
    pub fn true_estimate(&self) -> f64 {
        self.estimate
    }

    pub fn episode_summary(&self) -> &EpisodeSummary {
        &self.summary
    }

    pub fn reset(&mut self, schedule: &Schedule) -> Observation {
        self.reset_with(schedule)
    }

    /// Starts an episode with an explicit target instead of a sampled one.
    pub fn reset_to_target(&mut self, schedule: &Schedule, target: TargetCommand) -> Result<Observation> {
        target.validate()?;
        self.reset_with(schedule);
        self.set_target(target);
        self.refresh_estimate();
        Ok(self.observe())
    }

    fn set_target(&mut self, target: TargetCommand) {
        self.target = target;
        self.target_pos = to_cartesian(&target).expect("sampled targets are valid");
        self.summary.target = target;
    }

    fn reset_with(&mut self, schedule: &Schedule) -> Observation {
        self.schedule = *schedule;
        let rest = PlantState::at_rest(&self.nominal_plant);
        let (cfg, state) = plant::randomize(&self.nominal_plant, &rest, &mut self.rng);
        self.plant_cfg = cfg;
        self.state = state;
        let target = sample_target(&schedule.task, &mut self.rng);
        self.step_count = 0;
        self.prev_action = [0.0; ACT_DIM];
        self.latch_time = None;
        self.detach_time = None;
        self.emitted = false;
        self.done = false;
        self.summary = EpisodeSummary::new(target, self.state.base_height(), self.plant_cfg.safe_height);
        self.set_target(target);
        self.episode_index += 1;
        self.refresh_estimate();
        self.observe()
    }

    fn refresh_estimate(&mut self) {
        let release = if self.state.ball_attached {
            let (p, v) = end_effector_state(&self.state, &self.plant_cfg);
            ReleaseState::new(p, v)
        } else {
            ReleaseState::new(self.state.ball_position, self.state.ball_velocity)
        };
        if let Ok(e) = displacement_error(&release, self.target_pos, &self.plant_cfg.ballistics) {
            self.estimate = e;
        }
        self.estimate_stats.push(self.estimate);
    }

    /// Builds a noisy observation at the schedule's training iteration.
    pub fn observe(&mut self) -> Observation {
        let noise = self.plant_cfg.obs_noise;
        let rng = &mut self.rng;
        let s = &self.state;
        let mut base_lin_vel = [0.0, 0.0, s.qdot[CROUCH]];
        for v in &mut base_lin_vel {
            *v += plant::uniform(rng, noise.root_lin_vel);
        }
        let mut joint_pos = [0.0; NUM_JOINTS];
        let mut joint_vel = [0.0; NUM_JOINTS];
        for i in 0..NUM_JOINTS {
            joint_pos[i] = s.q[i] - self.nominal_plant.default_pose[i] + plant::uniform(rng, noise.joint_pos);
            joint_vel[i] = s.qdot[i] + plant::uniform(rng, noise.joint_vel);
        }

        let beta = privileged_blend(self.schedule.iteration, self.config.privileged_fade_iters);
        let estimated_displacement = if beta <= 0.0 {
            self.estimate
        } else {
            let half = 3f64.sqrt() * self.estimate_stats.std();
            let surrogate = self.estimate_stats.mean + plant::uniform(rng, half);
            (1.0 - beta) * self.estimate + beta * surrogate
        };

        let body_roll = s.tilt + plant::uniform(rng, noise.joint_pos);

        let on = self.config.observe;
        let gate = |enabled: bool, v: f64| if enabled { v } else { 0.0 };
        self.last_obs = Observation {
            base_lin_vel,
            command: self.target.as_array(),
            joint_pos,
            joint_vel,
            prev_action: self.prev_action,
            ball_released: gate(on.ball_released, if self.latch_time.is_some() { 1.0 } else { 0.0 }),
            estimated_displacement: gate(on.estimate_displacement, estimated_displacement),
            body_roll: gate(on.body_roll, body_roll),
            foot_pitch: 0.0,
        };
        self.last_obs
    }

    /// Re-draws the observation at a given training iteration.
    pub fn observe_at(&mut self, training_iteration: u64) -> Observation {
        self.schedule.iteration = training_iteration;
        self.observe()
    }

    fn motor_command(&self, action: &[f64; ACT_DIM]) -> MotorCommand {
        let now = self.time();
        if let Some(t_detach) = self.detach_time {
            if now + TIME_EPS >= t_detach + self.config.post_release_zero_delay {
                return MotorCommand::zero();
            }
        }
        let mut cmd = MotorCommand::zero();
        for i in 0..NUM_JOINTS {
            cmd.offsets[i] = action[i] * self.nominal_plant.action_scale[i];
        }
        for &i in &BODY_JOINTS {
            cmd.offsets[i] *= if self.config.arm_only { 0.0 } else { self.schedule.body_action_scale };
        }
        cmd
    }

    fn emit_throw(&mut self) -> Result<f64> {
        let release = ReleaseState::new(self.state.ball_position, self.state.ball_velocity);
        let model = self.plant_cfg.ballistics;
        let error = displacement_error(&release, self.target_pos, &model)?;
        let r_throw = throwing_reward(error, self.target.r)?;
        let land = landing_point(&release, &model)?;
        self.emitted = true;
        self.summary.release = Some(release);
        self.summary.error = Some(error);
        self.summary.throwing = Some(r_throw);
        self.summary.landing_distance = Some((land.x * land.x + land.y * land.y).sqrt());
        Ok(self.rewards.lambda1 * r_throw)
    }

    /// Advances one control step.
    pub fn step(&mut self, action: &[f64; ACT_DIM]) -> Result<(Observation, f64, bool, StepInfo)> {
        if self.done {
            return invalid("step called on a finished episode; reset first");
        }
        let mut step_rewards = RewardBreakdown::default();
        let mut throw_emitted = false;
        let fault = action.iter().any(|a| !a.is_finite());

        if !fault {
            if action[RELEASE_CHANNEL] > 1.0 && self.latch_time.is_none() {
                self.latch_time = Some(self.time());
            }
            let cmd = self.motor_command(action);
            for _ in 0..self.config.decimation {
                if let (Some(t_latch), None) = (self.latch_time, self.detach_time) {
                    if self.state.time + TIME_EPS >= t_latch + self.config.release_delay {
                        self.state.detach_ball(&self.plant_cfg);
                        self.detach_time = Some(self.state.time);
                        self.summary.released = true;
                        self.summary.detach_time = Some(self.state.time);
                    }
                }
                self.state = plant::step(&self.state, &cmd, &self.plant_cfg);
                let h = self.state.base_height();
                self.summary.min_base_height = self.summary.min_base_height.min(h);
                self.summary.max_base_height = self.summary.max_base_height.max(h);
                self.summary.max_abs_tilt = self.summary.max_abs_tilt.max(self.state.tilt.abs());
                if self.state.tilt.abs() > self.plant_cfg.fall_bound {
                    self.summary.fell = true;
                }
                if self.state.fault {
                    break;
                }
            }
            self.prev_action = *action;
        }
        self.step_count += 1;
        self.summary.steps = self.step_count;
        if fault || self.state.fault {
            self.summary.fault = true;
        }

        if self.detach_time.is_some() && !self.emitted && !self.summary.fault {
            let (hand, _) = end_effector_state(&self.state, &self.plant_cfg);
            let separation = self.state.ball_position.distance(hand);
            if separation >= self.rewards.detach_threshold || self.state.ball_landed {
                step_rewards.throwing = self.emit_throw()?;
                throw_emitted = true;
            }
        }

        if !self.summary.fault {
            let dense_dt = if self.rewards.dense_dt_scaling { self.config.control_dt() } else { 1.0 };
            step_rewards.roll = self.rewards.lambda3 * roll_penalty(self.state.tilt, &self.rewards) * dense_dt;
        }

        let since_detach = self.detach_time.map(|t| self.state.time - t);
        let waited = matches!(since_detach, Some(dt) if self.emitted && dt + TIME_EPS >= self.schedule.stability_wait);
        let done = self.summary.fell
            || self.summary.fault
            || self.step_count >= self.config.max_episode_steps
            || waited;

        let mut summary_out = None;
        if done {
            if self.detach_time.is_some() && !self.emitted && !self.summary.fault {
                step_rewards.throwing = self.emit_throw()?;
                throw_emitted = true;
            }
            self.summary.stability = stability_reward(&self.summary);
            step_rewards.stability = self.rewards.lambda2 * self.summary.stability;
            self.done = true;
        }
        step_rewards.total = step_rewards.throwing + step_rewards.stability + step_rewards.roll;
        let acc = &mut self.summary.rewards;
        acc.throwing += step_rewards.throwing;
        acc.stability += step_rewards.stability;
        acc.roll += step_rewards.roll;
        acc.total += step_rewards.total;
        if done {
            summary_out = Some(self.summary);
        }

        self.refresh_estimate();
        let obs = self.observe();
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceRecord {
                episode: self.episode_index,
                step: self.step_count,
                observation: obs.to_vec(),
                action: action.to_vec(),
                reward: step_rewards.total,
            });
        }
        let info = StepInfo { rewards: step_rewards, throw_emitted, summary: summary_out };
        Ok((obs, step_rewards.total, done, info))
    }
}

/// Output of one batched step. Observations of finished environments are the
/// first observation of their fresh episode.
#[derive(Debug, Clone)]
pub struct BatchStep {
    pub observations: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub infos: Vec<StepInfo>,
}

/// Independent environments stepped together, with auto-reset.
#[derive(Debug, Clone)]
pub struct BatchEnv {
    pub envs: Vec<ThrowEnv>,
}

impl BatchEnv {
    /// One environment per seed-derived stream: `seed`, `seed + 1`, ...
    pub fn new(
        count: usize,
        config: EnvConfig,
        plant: PlantConfig,
        rewards: RewardConfig,
        schedule: Schedule,
        seed: u64,
    ) -> Self {
        let envs = (0..count)
            .map(|i| ThrowEnv::new(config, plant.clone(), rewards, schedule, env_seed(seed, i)))
            .collect();
        Self { envs }
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn set_schedule(&mut self, schedule: Schedule) {
        for env in &mut self.envs {
            env.set_schedule(schedule);
        }
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.envs.iter().map(|e| *e.last_observation()).collect()
    }

    pub fn batch_step(&mut self, actions: &[[f64; ACT_DIM]]) -> Result<BatchStep> {
        if actions.len() != self.envs.len() {
            return invalid(format!("{} action rows for {} environments", actions.len(), self.envs.len()));
        }
        let results: Vec<Result<(Observation, f64, bool, StepInfo)>> = self
            .envs
            .par_iter_mut()
            .zip(actions.par_iter())
            .map(|(env, action)| {
                let (obs, reward, done, info) = env.step(action)?;
                let schedule = *env.schedule();
                let obs = if done { env.reset(&schedule) } else { obs };
                Ok((obs, reward, done, info))
            })
            .collect();
        let mut out = BatchStep {
            observations: Vec::with_capacity(actions.len()),
            rewards: Vec::with_capacity(actions.len()),
            dones: Vec::with_capacity(actions.len()),
            infos: Vec::with_capacity(actions.len()),
        };
        for r in results {
            let (obs, reward, done, info) = r?;
            out.observations.push(obs);
            out.rewards.push(reward);
            out.dones.push(done);
            out.infos.push(info);
        }
        Ok(out)
    }
}

pub fn env_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64)
}

/// Schedule with a fixed target range, for tests and evaluation.
pub fn fixed_schedule(kind: TaskKind, range: [f64; 2], stability_wait: f64) -> Schedule {
    Schedule {
        task: TaskMode { kind, distance_range: range },
        stability_wait,
        body_action_scale: 1.0,
        iteration: 0,
    }
}

impl VectorEnv for BatchEnv {
    type Episode = EpisodeSummary;

    fn num_envs(&self) -> usize {
        self.envs.len()
    }

    fn obs_dim(&self) -> usize {
        OBS_DIM
    }

    fn act_dim(&self) -> usize {
        ACT_DIM
    }

    fn observations(&self) -> Vec<f64> {
        self.envs.iter().flat_map(|e| e.last_observation().to_vec()).collect()
    }

    fn step(&mut self, actions: &[f64]) -> Result<VecStep<EpisodeSummary>> {
        if actions.len() != self.envs.len() * ACT_DIM {
            return invalid(format!("{} action values for {} environments", actions.len(), self.envs.len()));
        }
        let rows: Vec<[f64; ACT_DIM]> =
            actions.chunks_exact(ACT_DIM).map(|c| c.try_into().expect("chunk of ACT_DIM")).collect();
        let out = self.batch_step(&rows)?;
        Ok(VecStep {
            observations: out.observations.iter().flat_map(|o| o.to_vec()).collect(),
            rewards: out.rewards,
            dones: out.dones,
            episodes: out.infos.into_iter().filter_map(|i| i.summary).collect(),
        })
    }
}
