//! Actor-critic learner: networks, clipped-surrogate updates, GAE and
//! checkpoints.

mod adam;
pub mod bandit;
pub mod checkpoint;
pub mod gae;
pub mod nn;
pub mod policy;
pub mod ppo;
pub mod surrogate;

pub use adam::AdamW;
pub use policy::{PolicyParams, DEFAULT_HIDDEN};
pub use ppo::{Ppo, PpoConfig, Rollout, RolloutBuffer, UpdateStats, VecStep, VectorEnv};
