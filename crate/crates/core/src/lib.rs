//! Reinforcement-learning throwing on a reduced full-body thrower.
//!
//! The crate is organised bottom-up:
//!
//! - [`ballistics`]: projectile flight and the minimum-distance throwing error.
//! - [`task`]: spherical target commands and the three reward terms.
//! - [`plant`]: the reduced five-joint thrower with a passive tilt and domain randomisation.
//! - [`env`]: the throwing MDP and its batched form.
//! - [`curriculum`]: adaptive difficulty.
//! - [`learner`]: actor-critic networks, GAE and clipped-surrogate PPO.
//! - [`tuner`]: asynchronous TPE search and the sweep harness.
//! - [`config`], [`train`], [`eval`]: run configuration and the training/evaluation drivers.
//! - [`oracle`]: randomised check of the throwing error against a brute-force sweep.

pub mod ballistics;
pub mod config;
pub mod curriculum;
pub mod env;
pub mod error;
pub mod eval;
pub mod learner;
pub mod math;
pub mod oracle;
pub mod plant;
pub mod task;
pub mod train;
pub mod tuner;

pub use error::{Error, Result};
