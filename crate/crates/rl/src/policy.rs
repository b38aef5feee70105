//! Separate policy and value networks and the clipped PPO objective.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{Categorical, DiagGaussian};
use crate::mlp::{Mlp, MlpShape};

/// Initial standard deviation of continuous heads.
pub const INITIAL_STD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Head {
    Discrete { actions: usize },
    Gaussian { dim: usize },
}

impl Head {
    pub fn outputs(self) -> usize {
        match self {
            Head::Discrete { actions } => actions,
            Head::Gaussian { dim } => dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(usize),
    Continuous(Vec<f64>),
}

impl Action {
    pub fn index(&self) -> usize {
        match self {
            Action::Discrete(a) => *a,
            Action::Continuous(_) => panic!("continuous action has no index"),
        }
    }
}

/// Enough to rebuild an [`ActorCritic`] of the same shape.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub obs_dim: usize,
    pub hidden: Vec<usize>,
    pub head: Head,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub arch: Architecture,
    pub policy: Mlp,
    pub value: Mlp,
    /// Continuous heads only; empty otherwise.
    pub log_std: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("observation has {got} entries, the network expects {expected}")]
    ObsDim { expected: usize, got: usize },
}

impl ActorCritic {
    pub fn new<R: Rng>(arch: Architecture, rng: &mut R) -> Self {
        let policy = Mlp::init(MlpShape::new(arch.obs_dim, &arch.hidden, arch.head.outputs()), 0.01, rng);
        let value = Mlp::init(MlpShape::new(arch.obs_dim, &arch.hidden, 1), 1.0, rng);
        let log_std = match arch.head {
            Head::Gaussian { dim } => vec![INITIAL_STD.ln(); dim],
            Head::Discrete { .. } => Vec::new(),
        };
        ActorCritic { arch, policy, value, log_std }
    }

    /// Every parameter set to zero.
    pub fn zeros(arch: Architecture) -> Self {
        let policy = Mlp::zeros(MlpShape::new(arch.obs_dim, &arch.hidden, arch.head.outputs()));
        let value = Mlp::zeros(MlpShape::new(arch.obs_dim, &arch.hidden, 1));
        let log_std = match arch.head {
            Head::Gaussian { dim } => vec![0.0; dim],
            Head::Discrete { .. } => Vec::new(),
        };
        ActorCritic { arch, policy, value, log_std }
    }

    pub fn param_count(&self) -> usize {
        self.policy.params.len() + self.value.params.len() + self.log_std.len()
    }

    pub fn check_obs(&self, obs: &[f64]) -> Result<(), PolicyError> {
        if obs.len() == self.arch.obs_dim {
            Ok(())
        } else {
            Err(PolicyError::ObsDim { expected: self.arch.obs_dim, got: obs.len() })
        }
    }

    /// Raw head outputs (logits or means) and values for a batch of observations.
    pub fn forward(&self, obs: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let (head, _) = self.policy.forward(obs);
        let (v, _) = self.value.forward(obs);
        (head, v.column(0).iter().copied().collect())
    }

    /// Samples (or, when `deterministic`, takes the mode of) one action per row.
    pub fn act<R: Rng>(
        &self,
        obs: &DMatrix<f64>,
        masks: &[Option<Vec<bool>>],
        deterministic: bool,
        rngs: &mut [R],
    ) -> Vec<(Action, f64, f64)> {
        let (head, values) = self.forward(obs);
        (0..obs.nrows())
            .map(|i| {
                let out: Vec<f64> = head.row(i).iter().copied().collect();
                match self.arch.head {
                    Head::Discrete { .. } => {
                        let d = Categorical::new(&out, masks[i].as_deref());
                        let a = if deterministic { d.mode() } else { d.sample(&mut rngs[i]) };
                        (Action::Discrete(a), d.log_prob(a), values[i])
                    }
                    Head::Gaussian { .. } => {
                        let d = DiagGaussian { mean: &out, log_std: &self.log_std };
                        let a = if deterministic { out.clone() } else { d.sample(&mut rngs[i]) };
                        let lp = d.log_prob(&a);
                        (Action::Continuous(a), lp, values[i])
                    }
                }
            })
            .collect()
    }

    pub fn values(&self, obs: &DMatrix<f64>) -> Vec<f64> {
        let (v, _) = self.value.forward(obs);
        v.column(0).iter().copied().collect()
    }
}

/// Training samples, one row per decision.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub masks: Vec<Option<Vec<bool>>>,
    pub actions: Vec<Action>,
    pub log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossStats {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Gradients aligned with `policy.params`, `value.params` and `log_std`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grads {
    pub policy: Vec<f64>,
    pub value: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl Grads {
    pub fn norm(&self) -> f64 {
        self.policy.iter().chain(&self.value).chain(&self.log_std).map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.policy.iter_mut().chain(self.value.iter_mut()).chain(self.log_std.iter_mut()) {
            *g *= s;
        }
    }
}

/// `-mean(min(r A, clip(r) A)) + c_v mean((V - R)^2) - c_e mean(H)` over
/// the rows `idx` of `batch`, with its gradient.
pub fn ppo_objective(net: &ActorCritic, batch: &Batch, idx: &[usize], w: &LossWeights) -> (LossStats, Grads) {
    let n = idx.len();
    let b = n as f64;
    let obs = DMatrix::from_fn(n, net.arch.obs_dim, |i, j| batch.obs[idx[i]][j]);
    let (head, pcache) = net.policy.forward(&obs);
    let (vout, vcache) = net.value.forward(&obs);

    let mut d_head = DMatrix::zeros(n, head.ncols());
    let mut d_value = DMatrix::zeros(n, 1);
    let mut g_log_std = vec![0.0; net.log_std.len()];
    let mut s = LossStats::default();

    for (row, &k) in idx.iter().enumerate() {
        let out: Vec<f64> = head.row(row).iter().copied().collect();
        let adv = batch.advantages[k];
        let (logp, entropy, d_logp_head, d_ent_head, d_logp_std) = match (&batch.actions[k], net.arch.head) {
            (Action::Discrete(a), Head::Discrete { .. }) => {
                let d = Categorical::new(&out, batch.masks[k].as_deref());
                (d.log_prob(*a), d.entropy(), d.grad_log_prob(*a), d.grad_entropy(), Vec::new())
            }
            (Action::Continuous(x), Head::Gaussian { .. }) => {
                let d = DiagGaussian { mean: &out, log_std: &net.log_std };
                let (dm, ds) = d.grad_log_prob(x);
                (d.log_prob(x), d.entropy(), dm, vec![0.0; out.len()], ds)
            }
            _ => panic!("action kind does not match the policy head"),
        };
        let log_ratio = logp - batch.log_probs[k];
        let ratio = log_ratio.exp();
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - w.clip, 1.0 + w.clip) * adv;
        let surrogate = unclipped.min(clipped);
        // Only the unclipped branch depends on the parameters.
        let d_logp = if unclipped <= clipped { -adv * ratio / b } else { 0.0 };
        for j in 0..out.len() {
            d_head[(row, j)] = d_logp * d_logp_head[j] - w.entropy_coef / b * d_ent_head[j];
        }
        for (g, ds) in g_log_std.iter_mut().zip(&d_logp_std) {
            *g += d_logp * ds;
        }
        let v = vout[(row, 0)];
        let err = v - batch.returns[k];
        d_value[(row, 0)] = w.value_coef * 2.0 * err / b;

        s.policy -= surrogate / b;
        s.value += err * err / b;
        s.entropy += entropy / b;
        s.approx_kl += ((ratio - 1.0) - log_ratio) / b;
        if (ratio - 1.0).abs() > w.clip {
            s.clip_fraction += 1.0 / b;
        }
    }
    // Gaussian entropy depends on log_std alone, d/ds_i = 1.
    for g in &mut g_log_std {
        *g -= w.entropy_coef;
    }
    s.total = s.policy + w.value_coef * s.value - w.entropy_coef * s.entropy;

    let mut grads = Grads {
        policy: vec![0.0; net.policy.params.len()],
        value: vec![0.0; net.value.params.len()],
        log_std: g_log_std,
    };
    net.policy.backward(&pcache, &d_head, &mut grads.policy);
    net.value.backward(&vcache, &d_value, &mut grads.value);
    (s, grads)
}
