//! Reduced analytical thrower.
//!
//! Five actuated joints: base yaw `ψ`, crouch height `h` (prismatic), shoulder
//! yaw `q0`, shoulder pitch `q1` (elevation of the upper arm) and elbow pitch
//! `q2`. Each joint is a torque-limited PD servo driving a decoupled effective
//! inertia. A passive roll-like tilt `α` is excited by the lateral acceleration
//! of the hand and doubles as the fall criterion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ballistics::BallisticModel;
use crate::math::Vec3;

pub const NUM_JOINTS: usize = 5;
pub const BASE_YAW: usize = 0;
pub const CROUCH: usize = 1;
pub const SHOULDER_YAW: usize = 2;
pub const SHOULDER_PITCH: usize = 3;
pub const ELBOW: usize = 4;

/// Joints driven by body (non-arm) actions.
pub const BODY_JOINTS: [usize; 2] = [BASE_YAW, CROUCH];
pub const ARM_JOINTS: [usize; 3] = [SHOULDER_YAW, SHOULDER_PITCH, ELBOW];

pub type JointVector = [f64; NUM_JOINTS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotProfile {
    Humanoid,
    Quadruped,
}

/// Uniform per-step observation noise half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObservationNoise {
    pub root_lin_vel: f64,
    pub joint_pos: f64,
    pub joint_vel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DomainRandomization {
    pub enabled: bool,
    pub arm_init: f64,
    pub other_init: f64,
    pub body_mass_delta: f64,
    pub min_mass: f64,
    pub noise: ObservationNoise,
}

impl Default for DomainRandomization {
    fn default() -> Self {
        Self {
            enabled: true,
            arm_init: 0.3,
            other_init: 0.025,
            body_mass_delta: 0.5,
            min_mass: 0.1,
            noise: ObservationNoise { root_lin_vel: 0.05, joint_pos: 0.01, joint_vel: 0.05 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    pub upper_arm_length: f64,
    pub forearm_length: f64,
    pub upper_arm_mass: f64,
    pub forearm_mass: f64,
    pub ball_mass: f64,
    pub body_mass: f64,
    /// Yaw radius of gyration of the body.
    pub body_gyration_radius: f64,
    /// Fraction of body mass reflected onto the crouch joint.
    pub crouch_mass_factor: f64,
    /// Shoulder position in the base frame, relative to the base point at height `h`.
    pub shoulder_offset: Vec3,
    pub crouch_range: [f64; 2],
    pub nominal_height: f64,
    /// Base height band the stability reward requires.
    pub safe_height: [f64; 2],
    pub body_kp: f64,
    pub body_kd: f64,
    pub arm_kp: f64,
    pub arm_kd: f64,
    pub torque_limit: JointVector,
    pub joint_lower: JointVector,
    pub joint_upper: JointVector,
    pub default_pose: JointVector,
    /// Policy action to joint-offset scaling.
    pub action_scale: JointVector,
    pub tilt_inertia: f64,
    pub tilt_stiffness: f64,
    pub tilt_damping: f64,
    pub tilt_coupling: f64,
    pub fall_bound: f64,
    pub physics_dt: f64,
    /// Freeze base yaw and crouch (arm-only throwing).
    pub body_locked: bool,
    pub ballistics: BallisticModel,
    pub randomization: DomainRandomization,
    /// Installed by [`randomize`]; zero for a nominal config.
    pub obs_noise: ObservationNoise,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self::humanoid()
    }
}

impl PlantConfig {
    pub fn for_profile(profile: RobotProfile) -> Self {
        match profile {
            RobotProfile::Humanoid => Self::humanoid(),
            RobotProfile::Quadruped => Self::quadruped(),
        }
    }

    pub fn humanoid() -> Self {
        let h_nom = 0.5;
        Self {
            upper_arm_length: 0.25,
            forearm_length: 0.25,
            upper_arm_mass: 0.5,
            forearm_mass: 0.3,
            ball_mass: 0.08,
            body_mass: 8.0,
            body_gyration_radius: 0.12,
            crouch_mass_factor: 0.05,
            shoulder_offset: Vec3::new(0.0, -0.15, 0.3),
            crouch_range: [0.2, 0.62],
            nominal_height: h_nom,
            safe_height: [0.5 * h_nom, 1.2 * h_nom],
            body_kp: 40.0,
            body_kd: 1.0,
            arm_kp: 10.0,
            arm_kd: 1.0,
            torque_limit: [1.5, 20.0, 1.5, 1.5, 0.5],
            joint_lower: [-2.5, 0.2, -2.5, -2.8, -2.5],
            joint_upper: [2.5, 0.62, 2.5, 2.8, 2.5],
            default_pose: [0.0, h_nom, 0.0, -1.3, 0.0],
            action_scale: [1.0, 0.1, 1.0, 1.0, 1.0],
            tilt_inertia: 0.8,
            tilt_stiffness: 40.0,
            tilt_damping: 4.0,
            tilt_coupling: 4.0,
            fall_bound: 0.35,
            physics_dt: 0.005,
            body_locked: false,
            ballistics: BallisticModel::vacuum(),
            randomization: DomainRandomization::default(),
            obs_noise: ObservationNoise::default(),
        }
    }

    pub fn quadruped() -> Self {
        let h_nom = 0.55;
        Self {
            upper_arm_length: 0.35,
            forearm_length: 0.35,
            upper_arm_mass: 0.8,
            forearm_mass: 0.5,
            body_mass: 30.0,
            body_gyration_radius: 0.2,
            crouch_mass_factor: 0.02,
            shoulder_offset: Vec3::new(0.15, 0.0, 0.12),
            crouch_range: [0.25, 0.7],
            nominal_height: h_nom,
            safe_height: [0.5 * h_nom, 1.2 * h_nom],
            body_kp: 80.0,
            body_kd: 1.0,
            arm_kp: 20.0,
            arm_kd: 1.0,
            torque_limit: [30.0, 40.0, 10.0, 10.0, 8.0],
            joint_lower: [-2.5, 0.25, -2.5, -2.8, -2.5],
            joint_upper: [2.5, 0.7, 2.5, 2.8, 2.5],
            default_pose: [0.0, h_nom, 0.0, -0.3, -1.2],
            action_scale: [1.0, 0.1, 1.0, 1.0, 1.0],
            tilt_inertia: 3.0,
            tilt_stiffness: 300.0,
            tilt_damping: 30.0,
            tilt_coupling: 4.0,
            ..Self::humanoid()
        }
    }

    pub fn kp(&self) -> JointVector {
        [self.body_kp, self.body_kp, self.arm_kp, self.arm_kp, self.arm_kp]
    }

    pub fn kd(&self) -> JointVector {
        [self.body_kd, self.body_kd, self.arm_kd, self.arm_kd, self.arm_kd]
    }

    /// Effective inertia seen by each joint (decoupled; the elbow configuration
    /// is taken at full extension for the shoulder terms).
    pub fn joint_inertia(&self) -> JointVector {
        let (l1, l2) = (self.upper_arm_length, self.forearm_length);
        let (m1, m2, mb) = (self.upper_arm_mass, self.forearm_mass, self.ball_mass);
        let shoulder = m1 * l1 * l1 / 3.0
            + m2 * ((l1 + 0.5 * l2).powi(2) + l2 * l2 / 12.0)
            + mb * (l1 + l2).powi(2);
        let elbow = m2 * l2 * l2 / 3.0 + mb * l2 * l2;
        [
            self.body_mass * self.body_gyration_radius.powi(2),
            self.body_mass * self.crouch_mass_factor,
            shoulder,
            shoulder,
            elbow,
        ]
    }

    pub fn clip_to_range(&self, q: &mut JointVector) {
        for i in 0..NUM_JOINTS {
            q[i] = q[i].clamp(self.joint_lower[i], self.joint_upper[i]);
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            self.upper_arm_length,
            self.forearm_length,
            self.upper_arm_mass,
            self.forearm_mass,
            self.ball_mass,
            self.body_mass,
            self.body_kp,
            self.body_kd,
            self.arm_kp,
            self.arm_kd,
            self.tilt_inertia,
            self.physics_dt,
            self.fall_bound,
        ];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || self.torque_limit.iter().any(|t| !(*t > 0.0)) {
            return crate::error::invalid("plant masses, lengths, gains and limits must be positive");
        }
        if !(self.crouch_range[0] < self.crouch_range[1]) {
            return crate::error::invalid("crouch range must satisfy h_min < h_max");
        }
        if (0..NUM_JOINTS).any(|i| !(self.joint_lower[i] < self.joint_upper[i])) {
            return crate::error::invalid("joint ranges must satisfy lower < upper");
        }
        self.ballistics.validate()
    }
}

/// Relative joint-position targets, offsets from the default pose.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorCommand {
    pub offsets: JointVector,
}

impl MotorCommand {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Absolute joint targets, clipped to the joint operating range.
    pub fn targets(&self, cfg: &PlantConfig) -> JointVector {
        let mut q = cfg.default_pose;
        for i in 0..NUM_JOINTS {
            q[i] += self.offsets[i];
        }
        cfg.clip_to_range(&mut q);
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub q: JointVector,
    pub qdot: JointVector,
    pub tilt: f64,
    pub tilt_rate: f64,
    pub ball_attached: bool,
    pub ball_position: Vec3,
    pub ball_velocity: Vec3,
    pub ball_landed: bool,
    /// Set when the integration produced a non-finite value.
    pub fault: bool,
    pub time: f64,
}

impl PlantState {
    pub fn at_rest(cfg: &PlantConfig) -> Self {
        Self::at_pose(cfg, cfg.default_pose)
    }

    pub fn at_pose(cfg: &PlantConfig, q: JointVector) -> Self {
        let mut s = Self {
            q,
            qdot: [0.0; NUM_JOINTS],
            tilt: 0.0,
            tilt_rate: 0.0,
            ball_attached: true,
            ball_position: Vec3::ZERO,
            ball_velocity: Vec3::ZERO,
            ball_landed: false,
            fault: false,
            time: 0.0,
        };
        let (p, v) = end_effector_state(&s, cfg);
        s.ball_position = p;
        s.ball_velocity = v;
        s
    }

    pub fn base_height(&self) -> f64 {
        self.q[CROUCH]
    }

    /// Lets go of the ball; it keeps the hand's current position and velocity.
    pub fn detach_ball(&mut self, cfg: &PlantConfig) {
        if self.ball_attached {
            let (p, v) = end_effector_state(self, cfg);
            self.ball_position = p;
            self.ball_velocity = v;
            self.ball_attached = false;
        }
    }

    /// Mechanical energy proxy: joint kinetic energy, PD spring energy about
    /// `targets`, and tilt oscillator energy. The spring term follows the
    /// torque limit: quadratic inside the linear band, linear beyond it.
    pub fn energy(&self, cfg: &PlantConfig, targets: &JointVector) -> f64 {
        let inertia = cfg.joint_inertia();
        let kp = cfg.kp();
        let mut e = 0.5 * cfg.tilt_inertia * self.tilt_rate.powi(2) + 0.5 * cfg.tilt_stiffness * self.tilt.powi(2);
        for i in 0..NUM_JOINTS {
            let x = (targets[i] - self.q[i]).abs();
            let limit = cfg.torque_limit[i];
            let band = limit / kp[i];
            let spring = if x <= band { 0.5 * kp[i] * x * x } else { limit * x - 0.5 * limit * band };
            e += 0.5 * inertia[i] * self.qdot[i].powi(2) + spring;
        }
        e
    }

    fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qdot.iter()).all(|v| v.is_finite())
            && self.tilt.is_finite()
            && self.tilt_rate.is_finite()
            && self.ball_position.is_finite()
            && self.ball_velocity.is_finite()
    }
}

fn arm_geometry(q: &JointVector, cfg: &PlantConfig) -> (f64, f64) {
    let (l1, l2) = (cfg.upper_arm_length, cfg.forearm_length);
    let (q1, q12) = (q[SHOULDER_PITCH], q[SHOULDER_PITCH] + q[ELBOW]);
    (l1 * q1.cos() + l2 * q12.cos(), l1 * q1.sin() + l2 * q12.sin())
}

/// Hand position in the base (yaw-aligned) frame.
fn hand_in_base(q: &JointVector, cfg: &PlantConfig) -> Vec3 {
    let (reach, lift) = arm_geometry(q, cfg);
    let (s0, c0) = q[SHOULDER_YAW].sin_cos();
    let o = cfg.shoulder_offset;
    Vec3::new(o.x + reach * c0, o.y + reach * s0, q[CROUCH] + o.z + lift)
}

/// Forward kinematics of the yaw–crouch–shoulder-yaw–shoulder-pitch–elbow chain.
pub fn hand_position(q: &JointVector, cfg: &PlantConfig) -> Vec3 {
    hand_in_base(q, cfg).rotate_z(q[BASE_YAW])
}

/// Columns of the hand-position Jacobian, one per joint.
pub fn hand_jacobian(q: &JointVector, cfg: &PlantConfig) -> [Vec3; NUM_JOINTS] {
    let (l2, q12) = (cfg.forearm_length, q[SHOULDER_PITCH] + q[ELBOW]);
    let (reach, lift) = arm_geometry(q, cfg);
    let (s0, c0) = q[SHOULDER_YAW].sin_cos();
    let psi = q[BASE_YAW];
    let base = hand_in_base(q, cfg);

    let d_yaw = Vec3::new(-base.y, base.x, 0.0).rotate_z(psi);
    let d_crouch = Vec3::new(0.0, 0.0, 1.0);
    let d_q0 = Vec3::new(-reach * s0, reach * c0, 0.0).rotate_z(psi);
    // d(reach)/dq1 = -lift, d(lift)/dq1 = reach
    let d_q1 = Vec3::new(-lift * c0, -lift * s0, reach).rotate_z(psi);
    let (dr2, dl2) = (-l2 * q12.sin(), l2 * q12.cos());
    let d_q2 = Vec3::new(dr2 * c0, dr2 * s0, dl2).rotate_z(psi);
    [d_yaw, d_crouch, d_q0, d_q1, d_q2]
}

pub fn end_effector_state(state: &PlantState, cfg: &PlantConfig) -> (Vec3, Vec3) {
    let jac = hand_jacobian(&state.q, cfg);
    let v = jac.iter().zip(state.qdot.iter()).fold(Vec3::ZERO, |acc, (col, qd)| acc + *col * *qd);
    (hand_position(&state.q, cfg), v)
}

/// Unit vector of the base's lateral (y) axis in the world frame.
fn lateral_axis(psi: f64) -> Vec3 {
    Vec3::new(-psi.sin(), psi.cos(), 0.0)
}

/// Advances the plant by one physics step of `cfg.physics_dt`.
pub fn step(state: &PlantState, cmd: &MotorCommand, cfg: &PlantConfig) -> PlantState {
    let dt = cfg.physics_dt;
    let mut next = state.clone();
    if state.fault {
        return next;
    }
    let targets = cmd.targets(cfg);
    let (kp, kd, inertia) = (cfg.kp(), cfg.kd(), cfg.joint_inertia());
    let (_, v_before) = end_effector_state(state, cfg);

    for i in 0..NUM_JOINTS {
        if cfg.body_locked && BODY_JOINTS.contains(&i) {
            next.qdot[i] = 0.0;
            continue;
        }
        let limit = cfg.torque_limit[i];
        let torque = (kp[i] * (targets[i] - state.q[i]) - kd[i] * state.qdot[i]).clamp(-limit, limit);
        let mut qd = state.qdot[i] + torque / inertia[i] * dt;
        let mut q = state.q[i] + qd * dt;
        // hard stops
        if q < cfg.joint_lower[i] {
            q = cfg.joint_lower[i];
            qd = qd.max(0.0);
        } else if q > cfg.joint_upper[i] {
            q = cfg.joint_upper[i];
            qd = qd.min(0.0);
        }
        next.q[i] = q;
        next.qdot[i] = qd;
    }

    let (hand_p, v_after) = end_effector_state(&next, cfg);
    let lateral_accel = ((v_after - v_before) * (1.0 / dt)).dot(lateral_axis(next.q[BASE_YAW]));
    let tilt_torque = -cfg.tilt_stiffness * state.tilt - cfg.tilt_damping * state.tilt_rate
        + cfg.tilt_coupling * cfg.forearm_mass * cfg.forearm_length * lateral_accel;
    next.tilt_rate = state.tilt_rate + tilt_torque / cfg.tilt_inertia * dt;
    next.tilt = state.tilt + next.tilt_rate * dt;

    if state.ball_attached {
        next.ball_position = hand_p;
        next.ball_velocity = v_after;
    } else if !state.ball_landed {
        let (p, v) = cfg.ballistics.advance(state.ball_position, state.ball_velocity, dt);
        if p.z <= 0.0 {
            next.ball_position = Vec3::new(p.x, p.y, 0.0);
            next.ball_velocity = Vec3::ZERO;
            next.ball_landed = true;
        } else {
            next.ball_position = p;
            next.ball_velocity = v;
        }
    }

    next.time = state.time + dt;
    if !next.is_finite() {
        next.fault = true;
    }
    next
}

/// Per-episode domain randomisation. Returns the randomised config (mass and
/// observation noise installed) and the perturbed initial state.
pub fn randomize<R: Rng + ?Sized>(cfg: &PlantConfig, state: &PlantState, rng: &mut R) -> (PlantConfig, PlantState) {
    let dr = cfg.randomization;
    if !dr.enabled {
        return (cfg.clone(), state.clone());
    }
    let mut out_cfg = cfg.clone();
    out_cfg.body_mass = (cfg.body_mass + uniform(rng, dr.body_mass_delta)).max(dr.min_mass);
    out_cfg.obs_noise = dr.noise;

    let mut q = state.q;
    for i in 0..NUM_JOINTS {
        let half = if ARM_JOINTS.contains(&i) { dr.arm_init } else { dr.other_init };
        q[i] += uniform(rng, half);
    }
    out_cfg.clip_to_range(&mut q);
    let out_state = PlantState { qdot: state.qdot, ..PlantState::at_pose(&out_cfg, q) };
    (out_cfg, out_state)
}

pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..=half_width)
    } else {
        0.0
    }
}
