//! Randomised agreement check between the fast throwing error and a dense
//! brute-force sweep of the same flight.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ballistics::{
    displacement_error, min_distance_bruteforce, predict_trajectory, BallisticModel, ReleaseState, DRAG_STEP,
};
use crate::error::Result;
use crate::math::Vec3;

pub const TOLERANCE: f64 = 1e-4;
pub const BRUTE_FORCE_DT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cases: usize,
    pub max_abs_diff: f64,
    /// Largest per-sample gap between a zero-drag flight and the vacuum flight.
    pub max_zero_drag_gap: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCase {
    pub release: ReleaseState,
    pub target: Vec3,
    pub model: BallisticModel,
}

pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> OracleCase {
    let position = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.2..2.0));
    let speed = rng.random_range(0.5..15.0);
    let elevation = rng.random_range(-0.5..1.4f64);
    let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
    let velocity = Vec3::new(
        speed * elevation.cos() * azimuth.cos(),
        speed * elevation.cos() * azimuth.sin(),
        speed * elevation.sin(),
    );
    let model = if rng.random_bool(0.5) {
        BallisticModel::vacuum()
    } else {
        BallisticModel::newtonian(rng.random_range(0.0..0.05))
    };
    let release = ReleaseState::new(position, velocity);
    let target = if rng.random_bool(0.5) {
        // near the flight path, where the minimum is sharpest
        let traj = predict_trajectory(&release, &model, DRAG_STEP, 60.0).expect("valid case");
        let s = traj.samples[rng.random_range(0..traj.samples.len())].position;
        let jitter = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(0.0..0.05));
        let p = s + jitter;
        Vec3::new(p.x, p.y, p.z.max(0.0))
    } else {
        Vec3::new(rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0), rng.random_range(0.0..3.0))
    };
    OracleCase { release, target, model }
}

/// The coarse-sampled minimum without refinement, a deliberately wrong estimator.
fn coarse_error(case: &OracleCase) -> Result<f64> {
    Ok(predict_trajectory(&case.release, &case.model, DRAG_STEP, 60.0)?.min_distance_to(case.target))
}

/// Compares `displacement_error` with the brute-force minimum on `cases`
/// random cases. With `inject_bug` the coarse estimator stands in for it.
pub fn run(cases: usize, seed: u64, inject_bug: bool) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_diff: f64 = 0.0;
    for _ in 0..cases {
        let case = random_case(&mut rng);
        let fast = if inject_bug {
            coarse_error(&case)?
        } else {
            displacement_error(&case.release, case.target, &case.model)?
        };
        let slow = min_distance_bruteforce(&case.release, case.target, &case.model, BRUTE_FORCE_DT)?;
        max_abs_diff = max_abs_diff.max((fast - slow).abs());
    }

    let mut max_zero_drag_gap: f64 = 0.0;
    for _ in 0..20 {
        let case = random_case(&mut rng);
        let a = predict_trajectory(&case.release, &BallisticModel::vacuum(), DRAG_STEP, 60.0)?;
        let b = predict_trajectory(&case.release, &BallisticModel::newtonian(0.0), DRAG_STEP, 60.0)?;
        if a.samples.len() != b.samples.len() {
            max_zero_drag_gap = f64::INFINITY;
            continue;
        }
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            max_zero_drag_gap = max_zero_drag_gap.max(sa.position.distance(sb.position));
        }
    }
    Ok(OracleReport {
        cases,
        max_abs_diff,
        max_zero_drag_gap,
        passed: max_abs_diff < TOLERANCE && max_zero_drag_gap < 1e-9,
    })
}
