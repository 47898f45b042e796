//! One-step continuous bandit used to sanity-check the learner.

use super::ppo::{VecStep, VectorEnv};
use crate::error::{invalid, Result};

/// Constant observation, reward `-(a - target)^2`, every step terminal.
#[derive(Debug, Clone)]
pub struct Bandit {
    pub target: f64,
    num_envs: usize,
}

impl Bandit {
    pub fn new(num_envs: usize, target: f64) -> Self {
        Self { target, num_envs }
    }
}

impl VectorEnv for Bandit {
    /// The action taken.
    type Episode = f64;

    fn num_envs(&self) -> usize {
        self.num_envs
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn act_dim(&self) -> usize {
        1
    }

    fn observations(&self) -> Vec<f64> {
        vec![1.0; self.num_envs]
    }

    fn step(&mut self, actions: &[f64]) -> Result<VecStep<f64>> {
        if actions.len() != self.num_envs {
            return invalid("bandit action batch has the wrong size");
        }
        Ok(VecStep {
            observations: self.observations(),
            rewards: actions.iter().map(|a| -(a - self.target).powi(2)).collect(),
            dones: vec![true; self.num_envs],
            episodes: actions.to_vec(),
        })
    }
}
