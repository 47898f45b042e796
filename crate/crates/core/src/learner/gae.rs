//! Generalised advantage estimation over a `[horizon, envs]` rollout stored
//! row-major (`index = t * num_envs + env`).

/// Returns `(advantages, returns)`.
///
/// `δ_t = r_t + γ V_{t+1} (1 - done_t) - V_t` and `A_t = δ_t + γλ (1 - done_t) A_{t+1}`,
/// with `last_values` bootstrapping the step after the horizon.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_values: &[f64],
    num_envs: usize,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert_eq!(values.len(), n);
    assert_eq!(dones.len(), n);
    assert_eq!(last_values.len(), num_envs);
    assert!(num_envs > 0 && n % num_envs == 0, "rollout is not a whole number of steps");
    let horizon = n / num_envs;

    let mut advantages = vec![0.0; n];
    for env in 0..num_envs {
        let mut next_adv = 0.0;
        for t in (0..horizon).rev() {
            let i = t * num_envs + env;
            let next_value = if t + 1 < horizon { values[i + num_envs] } else { last_values[env] };
            let not_done = if dones[i] { 0.0 } else { 1.0 };
            let delta = rewards[i] + gamma * next_value * not_done - values[i];
            next_adv = delta + gamma * lambda * not_done * next_adv;
            advantages[i] = next_adv;
        }
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Shifts and scales to zero mean and unit (population) variance.
pub fn normalize(values: &mut [f64]) {
    let n = values.len();
    if n < 2 {
        return;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    for v in values.iter_mut() {
        *v = (*v - mean) / std;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_transition() {
        let (a, r) = compute_gae(&[1.0], &[0.0], &[true], &[5.0], 1, 0.99, 0.93);
        assert_eq!((a[0], r[0]), (1.0, 1.0));
    }

    #[test]
    fn perfect_critic_gives_zero_advantage() {
        let gamma = 0.99;
        let rewards = [0.5, -0.2, 1.0];
        let v2 = rewards[2];
        let v1 = rewards[1] + gamma * v2;
        let v0 = rewards[0] + gamma * v1;
        let (a, _) = compute_gae(&rewards, &[v0, v1, v2], &[false, false, true], &[0.0], 1, gamma, 0.93);
        assert!(a.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn normalisation_moments() {
        let mut v: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin() * 3.0 + 2.0).collect();
        normalize(&mut v);
        let mean = v.iter().sum::<f64>() / 100.0;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 100.0;
        assert!(mean.abs() < 1e-12 && (var.sqrt() - 1.0).abs() < 1e-9);
    }
}
