use ndarray::{Array2, ArrayView2};
use rand::Rng;

use super::nn::Mlp;
use crate::error::{invalid, Result};

pub const DEFAULT_HIDDEN: [usize; 3] = [256, 128, 64];

/// Gaussian actor with a state-independent log-std, plus a separate critic of
/// the same trunk shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub log_std: Vec<f32>,
    /// Fixed per-channel observation scaling applied before both networks.
    pub input_scale: Vec<f32>,
}

impl PolicyParams {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        init_std: f64,
        input_scale: Vec<f32>,
        rng: &mut R,
    ) -> Result<Self> {
        if obs_dim == 0 || act_dim == 0 {
            return invalid("policy dimensions must be positive");
        }
        if input_scale.len() != obs_dim {
            return invalid(format!("input scale has {} entries for {obs_dim} observations", input_scale.len()));
        }
        if !(init_std > 0.0 && init_std.is_finite()) {
            return invalid(format!("initial std must be positive, got {init_std}"));
        }
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        let mut critic_sizes = actor_sizes.clone();
        actor_sizes.push(act_dim);
        critic_sizes.push(1);
        Ok(Self {
            actor: Mlp::new(&actor_sizes, 0.01, rng),
            critic: Mlp::new(&critic_sizes, 1.0, rng),
            log_std: vec![init_std.ln() as f32; act_dim],
            input_scale,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.actor.input_dim()
    }

    pub fn act_dim(&self) -> usize {
        self.actor.output_dim()
    }

    pub fn hidden(&self) -> &[usize] {
        let s = self.actor.sizes();
        &s[1..s.len() - 1]
    }

    /// Scales a row-major `[rows, obs_dim]` batch into the network input.
    pub fn prepare(&self, obs: &[f64]) -> Array2<f32> {
        let d = self.obs_dim();
        assert_eq!(obs.len() % d, 0, "observation batch is not a whole number of rows");
        let data = obs.iter().enumerate().map(|(i, v)| *v as f32 * self.input_scale[i % d]).collect();
        Array2::from_shape_vec((obs.len() / d, d), data).expect("shape")
    }

    pub fn mean(&self, x: ArrayView2<'_, f32>) -> Array2<f32> {
        self.actor.forward(x)
    }

    pub fn values(&self, x: ArrayView2<'_, f32>) -> Vec<f64> {
        self.critic.forward(x).iter().map(|v| *v as f64).collect()
    }

    pub fn log_std_f64(&self) -> Vec<f64> {
        self.log_std.iter().map(|v| *v as f64).collect()
    }

    /// Deterministic action (the Gaussian mean) for one observation.
    pub fn act_deterministic(&self, obs: &[f64]) -> Vec<f64> {
        let x = self.prepare(obs);
        self.mean(x.view()).iter().map(|v| *v as f64).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.actor.params().iter().chain(self.critic.params()).chain(&self.log_std).all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_and_initial_std() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = PolicyParams::new(24, 6, &DEFAULT_HIDDEN, 0.5, vec![1.0; 24], &mut rng).unwrap();
        assert_eq!(p.actor.sizes(), &[24, 256, 128, 64, 6]);
        assert_eq!(p.critic.sizes(), &[24, 256, 128, 64, 1]);
        assert_eq!(p.hidden(), &DEFAULT_HIDDEN);
        assert!(p.log_std.iter().all(|s| (s.exp() - 0.5).abs() < 1e-6));
        assert_eq!(p.act_deterministic(&[0.1; 24]).len(), 6);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(PolicyParams::new(4, 2, &[8], 0.5, vec![1.0; 3], &mut rng).is_err());
        assert!(PolicyParams::new(4, 2, &[8], 0.0, vec![1.0; 4], &mut rng).is_err());
    }
}
