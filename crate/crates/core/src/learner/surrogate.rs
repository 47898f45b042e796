//! Diagonal-Gaussian policy head: log-probabilities, KL divergence and the
//! clipped surrogate objective with its analytic gradient.

const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub fn gaussian_log_prob(action: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((a, m), ls)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - LOG_SQRT_2PI
        })
        .sum()
}

/// `KL(old ‖ new)` between two diagonal Gaussians.
pub fn gaussian_kl(old_mean: &[f64], old_log_std: &[f64], new_mean: &[f64], new_log_std: &[f64]) -> f64 {
    (0..old_mean.len())
        .map(|j| {
            let (so2, sn2) = ((2.0 * old_log_std[j]).exp(), (2.0 * new_log_std[j]).exp());
            let dm = old_mean[j] - new_mean[j];
            new_log_std[j] - old_log_std[j] + (so2 + dm * dm) / (2.0 * sn2) - 0.5
        })
        .sum()
}

/// Entropy of a diagonal Gaussian.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + LOG_SQRT_2PI).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSample {
    /// `-min(ρA, clip(ρ, 1-ε, 1+ε)A)`, the quantity minimised.
    pub loss: f64,
    pub ratio: f64,
    /// `|ρ - 1| > ε`.
    pub clipped: bool,
}

/// Per-sample clipped surrogate loss. Gradients with respect to the mean and
/// log-std are *added* into `grad_mean` and `grad_log_std`, scaled by `weight`.
#[allow(clippy::too_many_arguments)]
pub fn clipped_surrogate(
    action: &[f64],
    mean: &[f64],
    log_std: &[f64],
    old_log_prob: f64,
    advantage: f64,
    clip: f64,
    weight: f64,
    grad_mean: &mut [f64],
    grad_log_std: &mut [f64],
) -> SurrogateSample {
    let log_prob = gaussian_log_prob(action, mean, log_std);
    let ratio = (log_prob - old_log_prob).exp();
    let unclipped = ratio * advantage;
    let clipped_obj = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    let loss = -unclipped.min(clipped_obj);
    // the clipped branch has zero gradient
    let active = !((advantage > 0.0 && ratio > 1.0 + clip) || (advantage < 0.0 && ratio < 1.0 - clip));
    if active {
        let scale = -advantage * ratio * weight;
        for j in 0..mean.len() {
            let inv_var = (-2.0 * log_std[j]).exp();
            let d = action[j] - mean[j];
            grad_mean[j] += scale * d * inv_var;
            grad_log_std[j] += scale * (d * d * inv_var - 1.0);
        }
    }
    SurrogateSample { loss, ratio, clipped: (ratio - 1.0).abs() > clip }
}
