use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Bool(bool),
    Float(f64),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Self::Float(v) => Some(*v),
            Self::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Self::Bool(b) => Some(*b),
            Self::Float(_) => None,
        }
    }
}

pub type Assignment = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Continuous { lo: f64, hi: f64 },
    LogContinuous { lo: f64, hi: f64 },
    Boolean,
    /// Held constant; never searched.
    Fixed { value: ParamValue },
}

impl Domain {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Continuous { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                invalid(format!("continuous range [{lo}, {hi}] is empty"))
            }
            Self::LogContinuous { lo, hi } if !(lo > 0.0 && lo < hi && hi.is_finite()) => {
                invalid(format!("log range [{lo}, {hi}] must be positive and non-empty"))
            }
            _ => Ok(()),
        }
    }

    /// Bounds in the space the density model works in (log for log dimensions).
    pub fn internal_bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Self::Continuous { lo, hi } => Some((lo, hi)),
            Self::LogContinuous { lo, hi } => Some((lo.ln(), hi.ln())),
            _ => None,
        }
    }

    pub fn to_internal(&self, v: f64) -> f64 {
        match self {
            Self::LogContinuous { .. } => v.ln(),
            _ => v,
        }
    }

    pub fn from_internal(&self, u: f64) -> f64 {
        match *self {
            Self::LogContinuous { lo, hi } => u.exp().clamp(lo, hi),
            Self::Continuous { lo, hi } => u.clamp(lo, hi),
            _ => u,
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (*self, v) {
            (Self::Continuous { lo, hi } | Self::LogContinuous { lo, hi }, ParamValue::Float(x)) => {
                (lo..=hi).contains(x)
            }
            (Self::Boolean, ParamValue::Bool(_)) => true,
            (Self::Fixed { value }, v) => value == *v,
            _ => false,
        }
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match *self {
            Self::Continuous { .. } | Self::LogContinuous { .. } => {
                let (lo, hi) = self.internal_bounds().expect("continuous");
                ParamValue::Float(self.from_internal(rng.random_range(lo..=hi)))
            }
            Self::Boolean => ParamValue::Bool(rng.random_bool(0.5)),
            Self::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub dims: Vec<Dimension>,
}

pub mod names {
    pub const STABILITY_REWARD_PCT: &str = "stability_reward_pct";
    pub const STABILITY_THRESHOLD: &str = "stability_threshold";
    pub const ACCURACY_THRESHOLD: &str = "accuracy_threshold";
    pub const DESIRED_KL: &str = "desired_kl";
    pub const ROLL_REWARD_PCT: &str = "roll_reward_pct";
    pub const REWARD_SCALE: &str = "reward_scale";
    pub const VALUE_LOSS_COEF: &str = "value_loss_coef";
    pub const GRU: &str = "gru";
    pub const FOOT_PITCH_STATE: &str = "foot_pitch_state";
    pub const BODY_ROLL_STATE: &str = "body_roll_state";
    pub const ESTIMATE_STATE: &str = "estimate_displacement_state";
    pub const RELEASED_STATE: &str = "ball_released_state";
}

impl Default for SearchSpace {
    fn default() -> Self {
        use names::*;
        let c = |name: &str, lo, hi| Dimension { name: name.into(), domain: Domain::Continuous { lo, hi } };
        let b = |name: &str| Dimension { name: name.into(), domain: Domain::Boolean };
        Self {
            dims: vec![
                c(STABILITY_REWARD_PCT, 0.0, 0.2),
                c(STABILITY_THRESHOLD, 0.0, 1.0),
                c(ACCURACY_THRESHOLD, 0.0, 1.0),
                Dimension { name: DESIRED_KL.into(), domain: Domain::LogContinuous { lo: 1e-3, hi: 1e-1 } },
                c(ROLL_REWARD_PCT, 0.0, 0.5),
                c(REWARD_SCALE, 0.5, 5.0),
                c(VALUE_LOSS_COEF, 0.1, 1.0),
                Dimension { name: GRU.into(), domain: Domain::Fixed { value: ParamValue::Bool(false) } },
                b(FOOT_PITCH_STATE),
                b(BODY_ROLL_STATE),
                b(ESTIMATE_STATE),
                b(RELEASED_STATE),
            ],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return invalid("search space is empty");
        }
        let mut seen = std::collections::BTreeSet::new();
        for d in &self.dims {
            if !seen.insert(&d.name) {
                return invalid(format!("dimension {} appears twice", d.name));
            }
            d.domain.validate()?;
        }
        Ok(())
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        self.dims.iter().map(|d| (d.name.clone(), d.domain.sample_uniform(rng))).collect()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        a.len() == self.dims.len() && self.dims.iter().all(|d| a.get(&d.name).is_some_and(|v| d.domain.contains(v)))
    }
}
