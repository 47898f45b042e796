//! Tree-structured Parzen estimator over independent dimensions.
//!
//! Complete trials are split at the objective quantile into a good set and a
//! bad set. Each continuous dimension gets a mixture of a uniform prior and
//! truncated Gaussian kernels centred on the observed values; booleans get a
//! smoothed Bernoulli. Candidates are drawn from the good-set model and the one
//! maximising `l(x) / g(x)` wins. Objectives are maximised.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::space::{Assignment, Domain, ParamValue, SearchSpace};
use super::{TrialRecord, TrialStatus};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeConfig {
    pub quantile: f64,
    pub n_candidates: usize,
    pub n_startup: usize,
    /// Bandwidth floor as a fraction of the dimension's range.
    pub min_bandwidth_frac: f64,
    /// Also floor the bandwidth at `range / min(100, n + 1)` for `n` kernels,
    /// so a tight early cluster cannot shrink the kernels to a point.
    pub count_floor: bool,
}

impl Default for TpeConfig {
    fn default() -> Self {
        Self { quantile: 0.25, n_candidates: 24, n_startup: 10, min_bandwidth_frac: 0.01, count_floor: true }
    }
}

impl TpeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return invalid(format!("quantile must lie in (0, 1), got {}", self.quantile));
        }
        if self.n_candidates == 0 {
            return invalid("n_candidates must be positive");
        }
        if !(self.min_bandwidth_frac > 0.0) {
            return invalid("min_bandwidth_frac must be positive");
        }
        Ok(())
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Uniform prior plus equally weighted truncated Gaussians on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct Parzen {
    lo: f64,
    hi: f64,
    centers: Vec<f64>,
    bandwidth: f64,
    /// Probability mass of each kernel inside the bounds.
    mass: Vec<f64>,
}

impl Parzen {
    pub fn fit(points: &[f64], lo: f64, hi: f64, min_bandwidth_frac: f64, count_floor: bool) -> Self {
        let range = hi - lo;
        let n = points.len();
        let mut floor = min_bandwidth_frac * range;
        if count_floor {
            floor = floor.max(range / (n + 1).min(100) as f64);
        }
        let bandwidth = if n < 2 {
            range
        } else {
            let mean = points.iter().sum::<f64>() / n as f64;
            let sd = (points.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            1.06 * sd * (n as f64).powf(-0.2)
        }
        .clamp(floor.min(range), range);
        let mass = points
            .iter()
            .map(|c| normal_cdf((hi - c) / bandwidth) - normal_cdf((lo - c) / bandwidth))
            .collect();
        Self { lo, hi, centers: points.to_vec(), bandwidth, mass }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(self.lo..=self.hi).contains(&x) {
            return 0.0;
        }
        let prior = 1.0 / (self.hi - self.lo);
        let h = self.bandwidth;
        let kernels: f64 = self
            .centers
            .iter()
            .zip(&self.mass)
            .map(|(c, m)| {
                let z = (x - c) / h;
                (-0.5 * z * z).exp() / (h * (2.0 * std::f64::consts::PI).sqrt() * m.max(1e-300))
            })
            .sum();
        (prior + kernels) / (1 + self.centers.len()) as f64
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let k = rng.random_range(0..=self.centers.len());
        if k == self.centers.len() {
            return rng.random_range(self.lo..=self.hi);
        }
        let c = self.centers[k];
        for _ in 0..1000 {
            let z: f64 = StandardNormal.sample(rng);
            let x = c + self.bandwidth * z;
            if (self.lo..=self.hi).contains(&x) {
                return x;
            }
        }
        c.clamp(self.lo, self.hi)
    }
}

/// `(count_true + 1) / (n + 2)`.
pub fn bernoulli_smoothed(values: &[bool]) -> f64 {
    (values.iter().filter(|v| **v).count() as f64 + 1.0) / (values.len() as f64 + 2.0)
}

enum Model {
    Continuous { domain: Domain, good: Parzen, bad: Parzen },
    Boolean { good: f64, bad: f64 },
    Fixed(ParamValue),
}

/// Proposes the next assignment. Trials that are not complete with a finite
/// objective are ignored.
pub fn suggest<R: Rng + ?Sized>(
    history: &[TrialRecord],
    space: &SearchSpace,
    cfg: &TpeConfig,
    rng: &mut R,
) -> Result<Assignment> {
    space.validate()?;
    cfg.validate()?;
    let mut complete: Vec<&TrialRecord> = history
        .iter()
        .filter(|t| t.status == TrialStatus::Complete && t.objective.is_some_and(f64::is_finite))
        .filter(|t| space.contains(&t.params))
        .collect();
    if complete.len() < cfg.n_startup.max(2) {
        return Ok(space.sample_uniform(rng));
    }
    let obj = |t: &TrialRecord| t.objective.expect("filtered");
    let first = obj(complete[0]);
    if complete.iter().all(|t| obj(t) == first) {
        // nothing to separate good from bad
        return Ok(space.sample_uniform(rng));
    }
    // best first; ties broken by id for reproducibility
    complete.sort_by(|a, b| obj(b).total_cmp(&obj(a)).then(a.id.cmp(&b.id)));
    let n_good = ((cfg.quantile * complete.len() as f64).ceil() as usize).clamp(1, complete.len() - 1);
    let (good, bad) = complete.split_at(n_good);

    let models: Vec<(String, Model)> = space
        .dims
        .iter()
        .map(|d| {
            let model = match d.domain {
                Domain::Continuous { .. } | Domain::LogContinuous { .. } => {
                    let (lo, hi) = d.domain.internal_bounds().expect("continuous");
                    let pts = |set: &[&TrialRecord]| -> Vec<f64> {
                        set.iter()
                            .filter_map(|t| t.params[&d.name].as_f64())
                            .map(|v| d.domain.to_internal(v))
                            .collect()
                    };
                    Model::Continuous {
                        domain: d.domain,
                        good: Parzen::fit(&pts(good), lo, hi, cfg.min_bandwidth_frac, cfg.count_floor),
                        bad: Parzen::fit(&pts(bad), lo, hi, cfg.min_bandwidth_frac, cfg.count_floor),
                    }
                }
                Domain::Boolean => {
                    let vals = |set: &[&TrialRecord]| -> Vec<bool> {
                        set.iter().filter_map(|t| t.params[&d.name].as_bool()).collect()
                    };
                    Model::Boolean { good: bernoulli_smoothed(&vals(good)), bad: bernoulli_smoothed(&vals(bad)) }
                }
                Domain::Fixed { value } => Model::Fixed(value),
            };
            (d.name.clone(), model)
        })
        .collect();

    let mut best: Option<(f64, Assignment)> = None;
    for _ in 0..cfg.n_candidates {
        let mut cand = Assignment::new();
        let mut score = 0.0;
        for (name, model) in &models {
            let value = match model {
                Model::Continuous { domain, good, bad } => {
                    let u = good.sample(rng);
                    score += good.pdf(u).ln() - bad.pdf(u).max(1e-300).ln();
                    ParamValue::Float(domain.from_internal(u))
                }
                Model::Boolean { good, bad } => {
                    let v = rng.random_bool(*good);
                    score += if v { good.ln() - bad.ln() } else { (1.0 - good).ln() - (1.0 - bad).ln() };
                    ParamValue::Bool(v)
                }
                Model::Fixed(v) => *v,
            };
            cand.insert(name.clone(), value);
        }
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, cand));
        }
    }
    Ok(best.expect("at least one candidate").1)
}
