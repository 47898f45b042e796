//! Projectile flight prediction and the minimum-distance throwing error.
//!
//! The flight clock starts at the release instant. Two models are supported:
//! vacuum flight (closed form) and Newtonian quadratic drag integrated with
//! fixed-step RK4. The throwing error `E` is the minimum Euclidean distance
//! between the continuous flight path and the target, over `t ∈ [0, t_ground]`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math::{golden_section_min, Vec3};

pub const DEFAULT_GRAVITY: f64 = 9.81;

/// RK4 step used for drag flights inside [`displacement_error`].
pub const DRAG_STEP: f64 = 1e-3;

/// Coarse sampling interval for the minimum-distance search.
pub const SEARCH_STEP: f64 = 1e-3;

/// Flights longer than this are treated as never landing.
pub const MAX_FLIGHT_TIME: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseState {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl ReleaseState {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        Self { position, velocity }
    }

    /// At or below the ground and not moving up: nothing to fly.
    pub fn is_grounded(&self) -> bool {
        self.position.z <= 0.0 && self.velocity.z <= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Drag {
    Vacuum,
    Newtonian { drag_coeff: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallisticModel {
    pub drag: Drag,
    pub gravity: f64,
}

impl Default for BallisticModel {
    fn default() -> Self {
        Self::vacuum()
    }
}

impl BallisticModel {
    pub fn vacuum() -> Self {
        Self { drag: Drag::Vacuum, gravity: DEFAULT_GRAVITY }
    }

    pub fn newtonian(drag_coeff: f64) -> Self {
        Self { drag: Drag::Newtonian { drag_coeff }, gravity: DEFAULT_GRAVITY }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return invalid(format!("gravity must be positive, got {}", self.gravity));
        }
        if let Drag::Newtonian { drag_coeff } = self.drag {
            if !(drag_coeff >= 0.0 && drag_coeff.is_finite()) {
                return invalid(format!("drag coefficient must be >= 0, got {drag_coeff}"));
            }
        }
        Ok(())
    }

    fn acceleration(&self, velocity: Vec3) -> Vec3 {
        let gravity = Vec3::new(0.0, 0.0, -self.gravity);
        match self.drag {
            Drag::Vacuum => gravity,
            Drag::Newtonian { drag_coeff } => gravity - velocity * (drag_coeff * velocity.norm()),
        }
    }

    /// Advances a free-flying projectile by `h`: exact for vacuum, one RK4 step with drag.
    pub fn advance(&self, p: Vec3, v: Vec3, h: f64) -> (Vec3, Vec3) {
        match self.drag {
            Drag::Vacuum => {
                let g = Vec3::new(0.0, 0.0, -self.gravity);
                (p + v * h + g * (0.5 * h * h), v + g * h)
            }
            Drag::Newtonian { .. } => self.rk4(p, v, h),
        }
    }

    fn rk4(&self, p: Vec3, v: Vec3, h: f64) -> (Vec3, Vec3) {
        // acceleration depends on velocity only
        let a1 = self.acceleration(v);
        let v2 = v + a1 * (0.5 * h);
        let a2 = self.acceleration(v2);
        let v3 = v + a2 * (0.5 * h);
        let a3 = self.acceleration(v3);
        let v4 = v + a3 * h;
        let a4 = self.acceleration(v4);
        let p_next = p + (v + v2 * 2.0 + v3 * 2.0 + v4) * (h / 6.0);
        let v_next = v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
        (p_next, v_next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    /// Set when `t_max` ran out before the projectile reached the ground.
    pub truncated: bool,
}

impl Trajectory {
    pub fn terminal(&self) -> Option<&TrajectorySample> {
        if self.truncated {
            None
        } else {
            self.samples.last()
        }
    }

    pub fn min_distance_to(&self, target: Vec3) -> f64 {
        self.samples
            .iter()
            .map(|s| s.position.distance(target))
            .fold(f64::INFINITY, f64::min)
    }

    /// Writes `t,x,y,z` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,y,z")?;
        for s in &self.samples {
            writeln!(out, "{},{},{},{}", s.t, s.position.x, s.position.y, s.position.z)?;
        }
        Ok(())
    }
}

fn vacuum_position(release: &ReleaseState, gravity: f64, t: f64) -> Vec3 {
    let p = release.position + release.velocity * t;
    Vec3::new(p.x, p.y, p.z - 0.5 * gravity * t * t)
}

fn vacuum_landing_time(release: &ReleaseState, gravity: f64) -> f64 {
    let (z0, vz) = (release.position.z.max(0.0), release.velocity.z);
    (vz + (vz * vz + 2.0 * gravity * z0).sqrt()) / gravity
}

/// Cubic Hermite interpolation across one integration step, `s ∈ [0, 1]`.
fn hermite(p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3, h: f64, s: f64) -> Vec3 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    p0 * h00 + v0 * (h10 * h) + p1 * h01 + v1 * (h11 * h)
}

/// Fraction of the step at which the interpolated height crosses zero.
fn crossing_fraction(p0: Vec3, v0: Vec3, p1: Vec3, v1: Vec3, h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if hermite(p0, v0, p1, v1, h, mid).z > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Samples the flight at `t = k·dt` until the first sample at or below the
/// ground. The ground crossing itself is the terminal sample.
pub fn predict_trajectory(
    release: &ReleaseState,
    model: &BallisticModel,
    dt: f64,
    t_max: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return invalid(format!("dt must be positive, got {dt}"));
    }
    if !(t_max > 0.0) {
        return invalid(format!("t_max must be positive, got {t_max}"));
    }
    if !(release.position.is_finite() && release.velocity.is_finite()) {
        return invalid("release state is not finite");
    }
    model.validate()?;

    let start = TrajectorySample { t: 0.0, position: release.position };
    if release.is_grounded() {
        return Ok(Trajectory { samples: vec![start], truncated: false });
    }

    let mut samples = vec![start];
    match model.drag {
        Drag::Vacuum => {
            let t_land = vacuum_landing_time(release, model.gravity);
            let mut k = 1usize;
            loop {
                let t = k as f64 * dt;
                if t >= t_land || t > t_max {
                    break;
                }
                samples.push(TrajectorySample { t, position: vacuum_position(release, model.gravity, t) });
                k += 1;
            }
            if t_land <= t_max {
                let mut p = vacuum_position(release, model.gravity, t_land);
                p.z = p.z.min(0.0);
                samples.push(TrajectorySample { t: t_land, position: p });
                Ok(Trajectory { samples, truncated: false })
            } else {
                Ok(Trajectory { samples, truncated: true })
            }
        }
        Drag::Newtonian { .. } => {
            let (mut p, mut v) = (release.position, release.velocity);
            let mut k = 0usize;
            loop {
                let t0 = k as f64 * dt;
                let t1 = (k + 1) as f64 * dt;
                let (p1, v1) = model.rk4(p, v, t1 - t0);
                if p1.z <= 0.0 {
                    let s = crossing_fraction(p, v, p1, v1, t1 - t0);
                    let t_land = t0 + s * (t1 - t0);
                    if t_land > t_max {
                        return Ok(Trajectory { samples, truncated: true });
                    }
                    let mut pl = hermite(p, v, p1, v1, t1 - t0, s);
                    pl.z = pl.z.min(0.0);
                    if t_land > samples.last().map_or(0.0, |s| s.t) {
                        samples.push(TrajectorySample { t: t_land, position: pl });
                    } else if let Some(last) = samples.last_mut() {
                        last.position = pl;
                    }
                    return Ok(Trajectory { samples, truncated: false });
                }
                if t1 > t_max {
                    return Ok(Trajectory { samples, truncated: true });
                }
                samples.push(TrajectorySample { t: t1, position: p1 });
                p = p1;
                v = v1;
                k += 1;
            }
        }
    }
}

/// Continuous-time view of one flight, used by the minimum-distance search.
struct Flight<'a> {
    release: &'a ReleaseState,
    model: &'a BallisticModel,
    t_land: f64,
    /// RK4 states at `k·DRAG_STEP`; empty for vacuum flights.
    knots: Vec<(Vec3, Vec3)>,
}

impl<'a> Flight<'a> {
    fn new(release: &'a ReleaseState, model: &'a BallisticModel) -> Self {
        match model.drag {
            Drag::Vacuum => Flight {
                release,
                model,
                t_land: vacuum_landing_time(release, model.gravity),
                knots: Vec::new(),
            },
            Drag::Newtonian { .. } => {
                let mut knots = vec![(release.position, release.velocity)];
                let mut t_land = MAX_FLIGHT_TIME;
                let max_steps = (MAX_FLIGHT_TIME / DRAG_STEP) as usize;
                for k in 0..max_steps {
                    let (p, v) = knots[k];
                    let (p1, v1) = model.rk4(p, v, DRAG_STEP);
                    knots.push((p1, v1));
                    if p1.z <= 0.0 {
                        t_land = (k as f64 + crossing_fraction(p, v, p1, v1, DRAG_STEP)) * DRAG_STEP;
                        break;
                    }
                }
                Flight { release, model, t_land, knots }
            }
        }
    }

    fn position(&self, t: f64) -> Vec3 {
        match self.model.drag {
            Drag::Vacuum => vacuum_position(self.release, self.model.gravity, t),
            Drag::Newtonian { .. } => {
                let i = ((t / DRAG_STEP).floor() as usize).min(self.knots.len() - 1);
                let (p, v) = self.knots[i];
                let tau = t - i as f64 * DRAG_STEP;
                if tau <= 0.0 {
                    p
                } else {
                    self.model.rk4(p, v, tau).0
                }
            }
        }
    }
}

/// Minimum distance between the flight path and `target` (the throwing error `E`).
///
/// Coarse 1 ms sampling locates the closest sample; golden-section search on
/// the two neighbouring intervals refines it in continuous time.
pub fn displacement_error(release: &ReleaseState, target: Vec3, model: &BallisticModel) -> Result<f64> {
    if !(target.z >= 0.0) || !target.is_finite() {
        return invalid(format!("target must be finite with z >= 0, got {target:?}"));
    }
    if !(release.position.is_finite() && release.velocity.is_finite()) {
        return invalid("release state is not finite");
    }
    model.validate()?;
    if release.is_grounded() {
        return Ok(release.position.distance(target));
    }

    let flight = Flight::new(release, model);
    let t_land = flight.t_land;
    let n = (t_land / SEARCH_STEP).ceil() as usize;
    let time_at = |k: usize| (k as f64 * SEARCH_STEP).min(t_land);
    let dist = |t: f64| flight.position(t).distance(target);

    let (mut best_k, mut best) = (0usize, f64::INFINITY);
    for k in 0..=n {
        let d = dist(time_at(k));
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let lo = time_at(best_k.saturating_sub(1));
    let hi = time_at((best_k + 1).min(n));
    if hi > lo {
        let (_, refined) = golden_section_min(dist, lo, hi, 1e-10);
        best = best.min(refined);
    }
    Ok(best)
}

/// Exhaustive minimum over a densely sampled trajectory. Test oracle only.
pub fn min_distance_bruteforce(
    release: &ReleaseState,
    target: Vec3,
    model: &BallisticModel,
    dt_fine: f64,
) -> Result<f64> {
    if !(dt_fine > 0.0 && dt_fine <= 1e-4) {
        return invalid(format!("dt_fine must be in (0, 1e-4], got {dt_fine}"));
    }
    let traj = predict_trajectory(release, model, dt_fine, MAX_FLIGHT_TIME)?;
    Ok(traj.min_distance_to(target))
}

/// Where the flight first reaches the ground.
pub fn landing_point(release: &ReleaseState, model: &BallisticModel) -> Result<Vec3> {
    let traj = predict_trajectory(release, model, DRAG_STEP, MAX_FLIGHT_TIME)?;
    Ok(traj.terminal().map(|s| s.position).unwrap_or(release.position))
}

/// Horizontal distance from the release point's ground projection to the landing point.
pub fn landing_range(release: &ReleaseState, model: &BallisticModel) -> Result<f64> {
    let d = landing_point(release, model)? - release.position;
    Ok((d.x * d.x + d.y * d.y).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(p: [f64; 3], v: [f64; 3]) -> ReleaseState {
        ReleaseState::new(p.into(), v.into())
    }

    #[test]
    fn horizontal_throw_lands_at_closed_form_point() {
        let traj = predict_trajectory(&rel([0.0, 0.0, 1.0], [3.0, 0.0, 0.0]), &BallisticModel::vacuum(), 1e-3, 10.0)
            .unwrap();
        let land = traj.terminal().unwrap();
        assert!((land.t - 0.4515).abs() < 1e-4, "t = {}", land.t);
        assert!((land.position.x - 1.3545).abs() < 1e-4, "x = {}", land.position.x);
        assert!(land.position.z <= 0.0);
    }

    #[test]
    fn straight_drop_lands_below_release() {
        let traj =
            predict_trajectory(&rel([0.0, 0.0, 1.0], [0.0; 3]), &BallisticModel::vacuum(), 1e-3, 10.0).unwrap();
        let land = traj.terminal().unwrap().position;
        assert_eq!((land.x, land.y), (0.0, 0.0));
        assert!(land.z <= 0.0 && land.z > -1e-12);
    }

    #[test]
    fn trajectory_samples_are_ordered_and_above_ground_until_terminal() {
        let traj = predict_trajectory(
            &rel([0.0, 0.0, 0.8], [4.0, 1.0, 5.0]),
            &BallisticModel::newtonian(0.02),
            2e-3,
            10.0,
        )
        .unwrap();
        assert!(!traj.truncated);
        let n = traj.samples.len();
        for w in traj.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
        assert!(traj.samples[..n - 1].iter().all(|s| s.position.z > 0.0));
        assert!(traj.samples[n - 1].position.z <= 0.0);
    }

    #[test]
    fn zero_drag_matches_vacuum_sample_by_sample() {
        let r = rel([0.1, -0.2, 1.2], [5.0, 2.0, 4.0]);
        let a = predict_trajectory(&r, &BallisticModel::vacuum(), 1e-3, 10.0).unwrap();
        let b = predict_trajectory(&r, &BallisticModel::newtonian(0.0), 1e-3, 10.0).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert!((sa.t - sb.t).abs() < 1e-9);
            assert!(sa.position.distance(sb.position) < 1e-9);
        }
    }

    #[test]
    fn bad_dt_is_rejected() {
        let r = rel([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert!(predict_trajectory(&r, &BallisticModel::vacuum(), 0.0, 1.0).is_err());
        assert!(predict_trajectory(&r, &BallisticModel::vacuum(), -1e-3, 1.0).is_err());
        assert!(min_distance_bruteforce(&r, Vec3::ZERO, &BallisticModel::vacuum(), 1e-3).is_err());
    }

    #[test]
    fn short_horizon_sets_truncated_flag() {
        let r = rel([0.0, 0.0, 1.0], [1.0, 0.0, 10.0]);
        let traj = predict_trajectory(&r, &BallisticModel::vacuum(), 1e-2, 0.5).unwrap();
        assert!(traj.truncated);
        assert!(traj.terminal().is_none());
        let traj = predict_trajectory(&r, &BallisticModel::newtonian(0.01), 1e-2, 0.5).unwrap();
        assert!(traj.truncated);
    }

    #[test]
    fn grounded_release_uses_release_point() {
        let r = rel([1.0, 0.0, 0.0], [2.0, 0.0, -1.0]);
        let e = displacement_error(&r, Vec3::new(4.0, 4.0, 0.0), &BallisticModel::vacuum()).unwrap();
        assert!((e - 5.0).abs() < 1e-12);
    }

    #[test]
    fn target_on_path_gives_zero_error() {
        let r = rel([0.0, 0.0, 1.0], [3.0, 1.0, 3.0]);
        let on_path = vacuum_position(&r, DEFAULT_GRAVITY, 0.3137);
        let e = displacement_error(&r, on_path, &BallisticModel::vacuum()).unwrap();
        assert!(e <= 1e-6, "E = {e}");
    }

    #[test]
    fn drop_oracle_cases() {
        let r = rel([0.0, 0.0, 1.0], [0.0; 3]);
        let m = BallisticModel::vacuum();
        // sampling resolution is |v|·dt/2 ≈ 1.6e-5 m near the target
        let e0 = min_distance_bruteforce(&r, Vec3::new(0.0, 0.0, 0.5), &m, 1e-5).unwrap();
        assert!(e0 < 1e-4);
        assert!(displacement_error(&r, Vec3::new(0.0, 0.0, 0.5), &m).unwrap() < 1e-9);
        let e1 = min_distance_bruteforce(&r, Vec3::new(1.0, 0.0, 0.5), &m, 1e-5).unwrap();
        assert!((e1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_target_height_is_rejected() {
        let r = rel([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]);
        assert!(displacement_error(&r, Vec3::new(1.0, 0.0, -0.1), &BallisticModel::vacuum()).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let traj =
            predict_trajectory(&rel([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]), &BallisticModel::vacuum(), 0.1, 5.0).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y,z\n"));
        assert_eq!(text.lines().count(), traj.samples.len() + 1);
    }
}
