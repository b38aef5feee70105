//! Independent oracles shared by the rl tests and the acceptance suite.
#![allow(dead_code)]

use axcomp_rl::policy::{ppo_objective, Batch, LossWeights};
use axcomp_rl::{stream, ActorCritic, Architecture, Head};
use nalgebra::DMatrix;
use rand::Rng;

/// A small random network with a batch whose ratios stay inside the clip
/// range, so the objective is smooth around the current parameters.
pub fn random_case(seed: u64) -> (ActorCritic, Batch, LossWeights) {
    let mut rng = stream(seed, 77);
    let obs_dim = rng.random_range(2..6);
    let layers = rng.random_range(1..3);
    let hidden: Vec<usize> = (0..layers).map(|_| rng.random_range(3..7)).collect();
    let outputs = rng.random_range(2..5);
    let head =
        if seed.is_multiple_of(2) { Head::Discrete { actions: outputs } } else { Head::Gaussian { dim: outputs } };
    let mut net = ActorCritic::new(Architecture { obs_dim, hidden, head }, &mut rng);
    // Larger output weights than the default init, so the head is not nearly uniform.
    for p in &mut net.policy.params {
        *p += rng.random_range(-0.5..0.5);
    }
    for s in &mut net.log_std {
        *s += rng.random_range(-0.3..0.3);
    }
    let rows = 6;
    let obs: Vec<Vec<f64>> = (0..rows).map(|_| (0..obs_dim).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    let masks: Vec<Option<Vec<bool>>> = (0..rows)
        .map(|_| match head {
            Head::Discrete { actions } if rng.random_bool(0.5) => {
                let mut m: Vec<bool> = (0..actions).map(|_| rng.random_bool(0.6)).collect();
                let keep = rng.random_range(0..actions);
                m[keep] = true;
                Some(m)
            }
            _ => None,
        })
        .collect();
    let m = DMatrix::from_fn(rows, obs_dim, |i, j| obs[i][j]);
    let mut rngs: Vec<_> = (0..rows as u64).map(|i| stream(seed, 100 + i)).collect();
    let acted = net.act(&m, &masks, false, &mut rngs);
    let batch = Batch {
        obs,
        masks,
        actions: acted.iter().map(|a| a.0.clone()).collect(),
        log_probs: acted.iter().map(|a| a.1 + rng.random_range(-0.05..0.05)).collect(),
        advantages: (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect(),
        returns: (0..rows).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    (net, batch, LossWeights { clip: 0.2, value_coef: 0.5, entropy_coef: 0.05 })
}

fn loss(net: &ActorCritic, batch: &Batch, w: &LossWeights) -> f64 {
    let idx: Vec<usize> = (0..batch.len()).collect();
    ppo_objective(net, batch, &idx, w).0.total
}

/// Relative error `|g - fd| / max(|g|, |fd|)` between the analytic gradient
/// and central differences of the scalar loss, over every parameter.
pub fn fd_relative_error(net: &ActorCritic, batch: &Batch, w: &LossWeights) -> f64 {
    let idx: Vec<usize> = (0..batch.len()).collect();
    let (_, g) = ppo_objective(net, batch, &idx, w);
    let analytic: Vec<f64> = g.policy.iter().chain(&g.value).chain(&g.log_std).copied().collect();
    let h = 1e-6;
    let mut numeric = Vec::with_capacity(analytic.len());
    for group in 0..3 {
        let len = [net.policy.params.len(), net.value.params.len(), net.log_std.len()][group];
        for i in 0..len {
            let probe = |delta: f64| {
                let mut n = net.clone();
                match group {
                    0 => n.policy.params[i] += delta,
                    1 => n.value.params[i] += delta,
                    _ => n.log_std[i] += delta,
                }
                loss(&n, batch, w)
            };
            numeric.push((probe(h) - probe(-h)) / (2.0 * h));
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&analytic).max(norm(&numeric)).max(1e-12)
}

/// Discounted Monte-Carlo return from each step, bootstrapped only if the
/// sequence ends mid-episode.
pub fn mc_returns(rewards: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let mut g = 0.0;
            let mut discount = 1.0;
            for k in t..rewards.len() {
                g += discount * rewards[k];
                if dones[k] {
                    return g;
                }
                discount *= gamma;
            }
            g + discount * bootstrap
        })
        .collect()
}

pub fn td_errors(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let next = if dones[t] {
                0.0
            } else if t + 1 < values.len() {
                values[t + 1]
            } else {
                bootstrap
            };
            rewards[t] + gamma * next - values[t]
        })
        .collect()
}

/// (rewards, values, dones, bootstrap)
pub type GaeCase = (Vec<f64>, Vec<f64>, Vec<bool>, f64);

/// Hand-built five-step sequences.
pub fn gae_cases() -> Vec<GaeCase> {
    vec![
        (vec![1.0, 0.0, -0.5, 2.0, 0.25], vec![0.3, -0.1, 0.8, 0.0, 1.5], vec![false; 5], 0.7),
        (vec![1.0, 0.0, -0.5, 2.0, 0.25], vec![0.3, -0.1, 0.8, 0.0, 1.5], vec![false, false, true, false, false], -0.4),
        (
            vec![-0.1, -0.1, -0.1, 1000.0, -0.1],
            vec![5.0, 6.0, 7.0, 8.0, 0.0],
            vec![false, false, false, true, true],
            3.0,
        ),
        (vec![0.0; 5], vec![0.0; 5], vec![false; 5], 0.0),
    ]
}
