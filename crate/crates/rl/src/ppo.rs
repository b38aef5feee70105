//! Proximal policy optimization update.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adam::Adam;
use crate::gae::normalize;
use crate::policy::{ppo_objective, ActorCritic, Batch, LossStats, LossWeights};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    /// Decisions collected per update, summed over all parallel environments.
    pub rollout_len: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub minibatches: usize,
    pub epochs: usize,
    pub clip_init: f64,
    /// Multiplies the clip range after every epoch.
    pub clip_decay: f64,
    pub clip_min: f64,
    pub hidden: Vec<usize>,
}

impl PpoConfig {
    pub fn block_fit() -> Self {
        PpoConfig {
            rollout_len: 500,
            gamma: 0.995,
            lambda: 0.95,
            entropy_coef: 0.01,
            learning_rate: 2.5e-4,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            minibatches: 50,
            epochs: 4,
            clip_init: 0.2,
            clip_decay: 0.99,
            clip_min: 0.04,
            hidden: vec![256, 256],
        }
    }

    pub fn block_push() -> Self {
        PpoConfig { rollout_len: 240, value_coef: 0.1, minibatches: 30, ..PpoConfig::block_fit() }
    }

    /// Applies `key=value`; returns false for an unknown key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse `{v}`"))
        }
        match key {
            "rollout_len" => self.rollout_len = num(value)?,
            "gamma" => self.gamma = num(value)?,
            "lambda" => self.lambda = num(value)?,
            "entropy_coef" => self.entropy_coef = num(value)?,
            "learning_rate" => self.learning_rate = num(value)?,
            "value_coef" => self.value_coef = num(value)?,
            "max_grad_norm" => self.max_grad_norm = num(value)?,
            "minibatches" => self.minibatches = num(value)?,
            "epochs" => self.epochs = num(value)?,
            "clip_init" => self.clip_init = num(value)?,
            "clip_decay" => self.clip_decay = num(value)?,
            "clip_min" => self.clip_min = num(value)?,
            "hidden" => {
                self.hidden = value.split(',').map(|s| num(s.trim())).collect::<Result<_, _>>()?;
            }
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> Result<(), String> {
        let ok = self.rollout_len > 0
            && self.minibatches > 0
            && self.minibatches <= self.rollout_len
            && self.epochs > 0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.lambda)
            && self.learning_rate > 0.0
            && self.max_grad_norm > 0.0
            && self.clip_min > 0.0
            && self.clip_init >= self.clip_min
            && !self.hidden.is_empty();
        if ok {
            Ok(())
        } else {
            Err(format!("invalid PPO configuration: {self:?}"))
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("non-finite loss in epoch {epoch}, minibatch {minibatch}: {stats:?}")]
    NonFinite { epoch: usize, minibatch: usize, stats: LossStats },
}

/// Mean statistics of one update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: LossStats,
    pub grad_norm: f64,
    /// Clip range in effect at the end of the update.
    pub clip: f64,
}

/// Runs the configured epochs over `batch`. `clip` carries the decayed clip
/// range across updates. On a non-finite loss the network and optimizer are
/// left as they were before the call.
pub fn ppo_update<R: Rng>(
    net: &mut ActorCritic,
    adam: &mut Adam,
    batch: &Batch,
    cfg: &PpoConfig,
    clip: &mut f64,
    rng: &mut R,
) -> Result<UpdateStats, PpoError> {
    let mut batch = batch.clone();
    normalize(&mut batch.advantages);
    let saved = (net.clone(), adam.clone(), *clip);
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut sum = UpdateStats::default();
    let mut count = 0.0;
    let chunk = batch.len().div_ceil(cfg.minibatches).max(1);
    for epoch in 0..cfg.epochs {
        order.shuffle(rng);
        let w = LossWeights { clip: *clip, value_coef: cfg.value_coef, entropy_coef: cfg.entropy_coef };
        for (minibatch, idx) in order.chunks(chunk).enumerate() {
            let (stats, mut grads) = ppo_objective(net, &batch, idx, &w);
            let norm = grads.norm();
            if !stats.total.is_finite() || !norm.is_finite() {
                (*net, *adam, *clip) = saved;
                return Err(PpoError::NonFinite { epoch, minibatch, stats });
            }
            if norm > cfg.max_grad_norm {
                grads.scale(cfg.max_grad_norm / norm);
            }
            adam.step(
                &mut [&mut net.policy.params, &mut net.value.params, &mut net.log_std],
                &[&grads.policy, &grads.value, &grads.log_std],
            );
            let l = &mut sum.loss;
            l.total += stats.total;
            l.policy += stats.policy;
            l.value += stats.value;
            l.entropy += stats.entropy;
            l.approx_kl += stats.approx_kl;
            l.clip_fraction += stats.clip_fraction;
            sum.grad_norm += norm;
            count += 1.0;
        }
        *clip = (*clip * cfg.clip_decay).max(cfg.clip_min);
    }
    let l = &mut sum.loss;
    for v in [&mut l.total, &mut l.policy, &mut l.value, &mut l.entropy, &mut l.approx_kl, &mut l.clip_fraction] {
        *v /= count;
    }
    sum.grad_norm /= count;
    sum.clip = *clip;
    Ok(sum)
}

pub fn new_optimizer(net: &ActorCritic, lr: f64) -> Adam {
    Adam::new(lr, &[net.policy.params.len(), net.value.params.len(), net.log_std.len()])
}
