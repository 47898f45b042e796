//! Clipped-surrogate policy optimisation with an adaptive, KL-targeted
//! learning rate.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::adam::AdamW;
use super::gae;
use super::policy::{PolicyParams, DEFAULT_HIDDEN};
use super::surrogate::{clipped_surrogate, gaussian_entropy, gaussian_kl, gaussian_log_prob};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub steps_per_env: usize,
    pub minibatches: usize,
    pub epochs: usize,
    pub entropy_coef: f64,
    pub value_loss_coef: f64,
    pub desired_kl: f64,
    pub adaptive_lr: bool,
    pub learning_rate: f64,
    pub lr_bounds: [f64; 2],
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    pub hidden: Vec<usize>,
    pub init_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.15,
            gamma: 0.99,
            gae_lambda: 0.93,
            steps_per_env: 26,
            minibatches: 6,
            epochs: 5,
            entropy_coef: 0.0,
            value_loss_coef: 0.98,
            desired_kl: 0.02,
            adaptive_lr: true,
            learning_rate: 1e-3,
            lr_bounds: [1e-5, 1e-2],
            weight_decay: 0.01,
            max_grad_norm: 1.0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            init_std: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return invalid(format!("clip must lie in (0, 1), got {}", self.clip));
        }
        for (name, v) in [("gamma", self.gamma), ("gae_lambda", self.gae_lambda)] {
            if !(v > 0.0 && v <= 1.0) {
                return invalid(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.steps_per_env == 0 || self.minibatches == 0 || self.epochs == 0 {
            return invalid("steps_per_env, minibatches and epochs must be positive");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return invalid("hidden layer sizes must be positive");
        }
        let [lo, hi] = self.lr_bounds;
        if !(lo > 0.0 && lo <= hi) || !(lo..=hi).contains(&self.learning_rate) {
            return invalid(format!("learning rate {} outside bounds [{lo}, {hi}]", self.learning_rate));
        }
        let non_negative = [
            self.entropy_coef,
            self.value_loss_coef,
            self.desired_kl,
            self.weight_decay,
            self.max_grad_norm,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return invalid("loss coefficients, desired KL, weight decay and grad norm must be finite and >= 0");
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return invalid("init_std must be positive");
        }
        Ok(())
    }

    /// Splits a batch into `minibatches` contiguous chunks whose sizes differ by at most one.
    pub fn minibatch_bounds(&self, batch: usize) -> Result<Vec<(usize, usize)>> {
        if self.minibatches > batch {
            return invalid(format!("{} minibatches for a batch of {batch}", self.minibatches));
        }
        let m = self.minibatches;
        Ok((0..m).map(|k| (k * batch / m, (k + 1) * batch / m)).collect())
    }
}

/// Batched environment interface used by the learner. Observations and
/// actions are row-major `[num_envs, dim]`; finished environments reset
/// themselves inside `step`.
pub trait VectorEnv {
    type Episode: Clone;
    fn num_envs(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn act_dim(&self) -> usize;
    fn observations(&self) -> Vec<f64>;
    fn step(&mut self, actions: &[f64]) -> Result<VecStep<Self::Episode>>;
}

#[derive(Debug, Clone)]
pub struct VecStep<E> {
    pub observations: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    /// Episodes that finished during this step.
    pub episodes: Vec<E>,
}

/// Transitions stored at `t * num_envs + env`.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub num_envs: usize,
    pub horizon: usize,
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Scaled network inputs.
    pub observations: Vec<f32>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub means: Vec<f64>,
    pub old_log_std: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub last_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBuffer {
    fn with_capacity(num_envs: usize, horizon: usize, obs_dim: usize, act_dim: usize) -> Self {
        let n = num_envs * horizon;
        Self {
            num_envs,
            horizon,
            obs_dim,
            act_dim,
            observations: Vec::with_capacity(n * obs_dim),
            actions: Vec::with_capacity(n * act_dim),
            log_probs: Vec::with_capacity(n),
            means: Vec::with_capacity(n * act_dim),
            old_log_std: Vec::new(),
            values: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            dones: Vec::with_capacity(n),
            last_values: Vec::new(),
            advantages: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn compute_gae(&mut self, gamma: f64, lambda: f64) {
        let (adv, ret) =
            gae::compute_gae(&self.rewards, &self.values, &self.dones, &self.last_values, self.num_envs, gamma, lambda);
        self.advantages = adv;
        self.returns = ret;
    }

    pub fn normalize_advantages(&mut self) {
        gae::normalize(&mut self.advantages);
    }
}

#[derive(Debug, Clone)]
pub struct Rollout<E> {
    pub buffer: RolloutBuffer,
    pub episodes: Vec<E>,
    /// Sum of every reward returned by the environments.
    pub reward_sum: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    /// Mean KL(old ‖ new) over the minibatches that were applied.
    pub kl: f64,
    pub clip_frac: f64,
    pub surrogate_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub learning_rate: f64,
    pub skipped_minibatches: usize,
}

#[derive(Debug, Clone)]
pub struct Ppo {
    pub policy: PolicyParams,
    pub config: PpoConfig,
    pub learning_rate: f64,
    actor_opt: AdamW,
    critic_opt: AdamW,
    std_opt: AdamW,
}

impl Ppo {
    pub fn new(policy: PolicyParams, config: PpoConfig) -> Result<Self> {
        config.validate()?;
        let wd = config.weight_decay as f32;
        Ok(Self {
            actor_opt: AdamW::new(policy.actor.params().len(), wd),
            critic_opt: AdamW::new(policy.critic.params().len(), wd),
            std_opt: AdamW::new(policy.log_std.len(), 0.0),
            learning_rate: config.learning_rate,
            policy,
            config,
        })
    }

    /// Runs `steps_per_env` steps in every environment. With `deterministic`
    /// the policy mean is executed instead of a sample.
    pub fn collect<V: VectorEnv, R: Rng + ?Sized>(
        &self,
        env: &mut V,
        rng: &mut R,
        deterministic: bool,
    ) -> Result<Rollout<V::Episode>> {
        let (n, od, ad) = (env.num_envs(), env.obs_dim(), env.act_dim());
        if od != self.policy.obs_dim() || ad != self.policy.act_dim() {
            return invalid(format!(
                "environment is {od}->{ad} but the policy is {}->{}",
                self.policy.obs_dim(),
                self.policy.act_dim()
            ));
        }
        let horizon = self.config.steps_per_env;
        let log_std = self.policy.log_std_f64();
        let std: Vec<f64> = log_std.iter().map(|l| l.exp()).collect();
        let mut buf = RolloutBuffer::with_capacity(n, horizon, od, ad);
        buf.old_log_std = log_std.clone();
        let mut episodes = Vec::new();
        let mut reward_sum = 0.0;
        let mut obs = env.observations();

        for _ in 0..horizon {
            let x = self.policy.prepare(&obs);
            let mean = self.policy.mean(x.view());
            let values = self.policy.values(x.view());
            if mean.iter().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericalFault("policy produced a non-finite output during collection".into()));
            }
            let mut actions = Vec::with_capacity(n * ad);
            for row in mean.rows() {
                let m: Vec<f64> = row.iter().map(|v| *v as f64).collect();
                let a: Vec<f64> = if deterministic {
                    m.clone()
                } else {
                    m.iter()
                        .zip(&std)
                        .map(|(mu, s)| {
                            let eps: f64 = StandardNormal.sample(rng);
                            mu + s * eps
                        })
                        .collect()
                };
                buf.log_probs.push(gaussian_log_prob(&a, &m, &log_std));
                buf.means.extend_from_slice(&m);
                actions.extend_from_slice(&a);
            }
            let step = env.step(&actions)?;
            buf.observations.extend(x.iter());
            buf.actions.extend_from_slice(&actions);
            buf.values.extend_from_slice(&values);
            buf.rewards.extend_from_slice(&step.rewards);
            buf.dones.extend_from_slice(&step.dones);
            reward_sum += step.rewards.iter().sum::<f64>();
            episodes.extend(step.episodes);
            obs = step.observations;
        }
        let x = self.policy.prepare(&obs);
        buf.last_values = self.policy.values(x.view());
        Ok(Rollout { buffer: buf, episodes, reward_sum })
    }

    /// Optimises the policy on a buffer whose advantages are already computed.
    /// Advantages are normalised here.
    pub fn update<R: Rng + ?Sized>(&mut self, buf: &mut RolloutBuffer, rng: &mut R) -> Result<UpdateStats> {
        let cfg = self.config.clone();
        if buf.advantages.len() != buf.len() {
            return invalid("advantages have not been computed");
        }
        buf.normalize_advantages();
        let bounds = cfg.minibatch_bounds(buf.len())?;
        let (od, ad) = (buf.obs_dim, buf.act_dim);
        let mut order: Vec<usize> = (0..buf.len()).collect();

        let mut stats = UpdateStats::default();
        let mut applied = 0usize;
        let mut samples = 0usize;
        let mut clipped = 0usize;

        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            for &(lo, hi) in &bounds {
                let idx = &order[lo..hi];
                let rows = idx.len();
                let mut x = Array2::<f32>::zeros((rows, od));
                for (r, &i) in idx.iter().enumerate() {
                    x.row_mut(r).assign(&ndarray::ArrayView1::from(&buf.observations[i * od..(i + 1) * od]));
                }
                let actor_cache = self.policy.actor.forward_cached(x.view());
                let log_std = self.policy.log_std_f64();

                let mut kl = 0.0;
                for (r, &i) in idx.iter().enumerate() {
                    let new_mean: Vec<f64> = actor_cache.output().row(r).iter().map(|v| *v as f64).collect();
                    kl += gaussian_kl(&buf.means[i * ad..(i + 1) * ad], &buf.old_log_std, &new_mean, &log_std);
                }
                kl /= rows as f64;
                let [lr_lo, lr_hi] = cfg.lr_bounds;
                if !kl.is_finite() {
                    self.learning_rate = (self.learning_rate / 2.0).clamp(lr_lo, lr_hi);
                    stats.skipped_minibatches += 1;
                    continue;
                }
                if cfg.adaptive_lr {
                    if kl > 2.0 * cfg.desired_kl {
                        self.learning_rate /= 1.5;
                    } else if kl < cfg.desired_kl / 2.0 {
                        self.learning_rate *= 1.5;
                    }
                    self.learning_rate = self.learning_rate.clamp(lr_lo, lr_hi);
                }

                let weight = 1.0 / rows as f64;
                let mut grad_mean = Array2::<f32>::zeros((rows, ad));
                let mut grad_log_std = vec![0.0f64; ad];
                let mut surrogate = 0.0;
                let mut gm = vec![0.0f64; ad];
                for (r, &i) in idx.iter().enumerate() {
                    let mean: Vec<f64> = actor_cache.output().row(r).iter().map(|v| *v as f64).collect();
                    gm.iter_mut().for_each(|g| *g = 0.0);
                    let s = clipped_surrogate(
                        &buf.actions[i * ad..(i + 1) * ad],
                        &mean,
                        &log_std,
                        buf.log_probs[i],
                        buf.advantages[i],
                        cfg.clip,
                        weight,
                        &mut gm,
                        &mut grad_log_std,
                    );
                    surrogate += s.loss * weight;
                    clipped += s.clipped as usize;
                    for (j, g) in gm.iter().enumerate() {
                        grad_mean[[r, j]] = *g as f32;
                    }
                }
                let entropy = gaussian_entropy(&log_std);
                for g in &mut grad_log_std {
                    *g -= cfg.entropy_coef;
                }

                let critic_cache = self.policy.critic.forward_cached(x.view());
                let mut grad_value = Array2::<f32>::zeros((rows, 1));
                let mut value_loss = 0.0;
                for (r, &i) in idx.iter().enumerate() {
                    let err = critic_cache.output()[[r, 0]] as f64 - buf.returns[i];
                    value_loss += err * err * weight;
                    grad_value[[r, 0]] = (2.0 * cfg.value_loss_coef * err * weight) as f32;
                }
                let loss = surrogate + cfg.value_loss_coef * value_loss - cfg.entropy_coef * entropy;
                if !loss.is_finite() {
                    return Err(Error::NumericalFault(format!("non-finite loss {loss} during update")));
                }

                let mut actor_grads = vec![0.0f32; self.policy.actor.params().len()];
                let mut critic_grads = vec![0.0f32; self.policy.critic.params().len()];
                self.policy.actor.backward(&actor_cache, grad_mean.view(), &mut actor_grads);
                self.policy.critic.backward(&critic_cache, grad_value.view(), &mut critic_grads);
                let mut std_grads: Vec<f32> = grad_log_std.iter().map(|g| *g as f32).collect();

                let norm = actor_grads
                    .iter()
                    .chain(&critic_grads)
                    .chain(&std_grads)
                    .map(|g| (*g as f64) * (*g as f64))
                    .sum::<f64>()
                    .sqrt();
                if !norm.is_finite() {
                    return Err(Error::NumericalFault("non-finite gradient during update".into()));
                }
                if cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm {
                    let s = (cfg.max_grad_norm / norm) as f32;
                    for g in actor_grads.iter_mut().chain(critic_grads.iter_mut()).chain(std_grads.iter_mut()) {
                        *g *= s;
                    }
                }
                let lr = self.learning_rate as f32;
                self.actor_opt.step(self.policy.actor.params_mut(), &actor_grads, lr);
                self.critic_opt.step(self.policy.critic.params_mut(), &critic_grads, lr);
                self.std_opt.step(&mut self.policy.log_std, &std_grads, lr);

                stats.kl += kl;
                stats.surrogate_loss += surrogate;
                stats.value_loss += value_loss;
                stats.entropy += entropy;
                applied += 1;
                samples += rows;
            }
        }
        if applied > 0 {
            let a = applied as f64;
            stats.kl /= a;
            stats.surrogate_loss /= a;
            stats.value_loss /= a;
            stats.entropy /= a;
            stats.clip_frac = clipped as f64 / samples as f64;
        }
        stats.learning_rate = self.learning_rate;
        if !self.policy.is_finite() {
            return Err(Error::NumericalFault("policy weights became non-finite".into()));
        }
        Ok(stats)
    }

    /// One full iteration: collect, GAE, update.
    pub fn iterate<V: VectorEnv, R: Rng + ?Sized>(
        &mut self,
        env: &mut V,
        rng: &mut R,
    ) -> Result<(Rollout<V::Episode>, UpdateStats)> {
        let mut rollout = self.collect(env, rng, false)?;
        rollout.buffer.compute_gae(self.config.gamma, self.config.gae_lambda);
        let stats = self.update(&mut rollout.buffer, rng)?;
        Ok((rollout, stats))
    }
}
