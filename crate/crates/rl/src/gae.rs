//! Generalized advantage estimation.

/// GAE with constant `gamma` and `lambda`.
///
/// `dones[t]` marks that the episode ended after step `t`; `bootstrap` is
/// the value of the state following the last step.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    gae_stepwise(rewards, values, dones, bootstrap, &vec![gamma; n], &vec![lambda; n])
}

/// GAE where step `t` discounts the next state by `gammas[t]` and carries
/// the next advantage with `gammas[t] * lambdas[t]`.
///
/// The expanded action spaces use `1` for both inside an environment step,
/// so the intermediate controller choices neither discount nor shrink the
/// environment reward that follows them.
pub fn gae_stepwise(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gammas: &[f64],
    lambdas: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n && gammas.len() == n && lambdas.len() == n, "misaligned sequences");
    let mut adv = vec![0.0; n];
    let mut next_value = bootstrap;
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gammas[t] * next_value * live - values[t];
        next_adv = delta + gammas[t] * lambdas[t] * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
pub fn normalize(x: &mut [f64]) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return;
    }
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        x.iter_mut().for_each(|v| *v -= mean);
        return;
    }
    x.iter_mut().for_each(|v| *v = (*v - mean) / std);
}
