//! Parallel environments and on-policy sample collection.

use axcomp_core::actionspace::{ActionSpaceError, ActionSpaceKind, SelectionBuffer};
use axcomp_core::sim2d::{Env, EnvConfig, EnvError, EpisodeParams, StepResult, Termination};
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::agent::{ActionAdapter, Decision};
use crate::gae::gae_stepwise;
use crate::policy::{Action, ActorCritic, Batch};
use crate::seed;

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error("no environment configurations given")]
    NoConfigs,
    #[error("need at least one worker")]
    NoWorkers,
    #[error("configurations disagree on catalog size ({0} vs {1})")]
    MixedCatalogs(usize, usize),
    #[error(transparent)]
    ActionSpace(#[from] ActionSpaceError),
    #[error("environment `{config}`: {source}")]
    Env { config: String, source: EnvError },
}

/// A finished training or evaluation episode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub config_id: usize,
    pub success: bool,
    #[serde(rename = "return")]
    pub ret: f64,
    pub steps: usize,
    pub termination: Termination,
}

struct Worker {
    env: Env,
    config_id: usize,
    buffer: SelectionBuffer,
    env_obs: Vec<f64>,
    ret: f64,
    reset_rng: ChaCha8Rng,
}

#[derive(Clone, Debug)]
struct Transition {
    obs: Vec<f64>,
    mask: Option<Vec<bool>>,
    action: Action,
    log_prob: f64,
    value: f64,
    reward: f64,
    done: bool,
    gamma: f64,
    lambda: f64,
}

/// One collected rollout.
#[derive(Clone, Debug)]
pub struct Rollout {
    pub batch: Batch,
    pub episodes: Vec<EpisodeRecord>,
    pub env_steps: u64,
}

/// Workers cycle through `configs` in round-robin order: every reset takes
/// the next configuration in the shared sequence.
pub struct VecEnv {
    configs: Vec<EnvConfig>,
    episode: EpisodeParams,
    adapter: ActionAdapter,
    workers: Vec<Worker>,
    act_rngs: Vec<ChaCha8Rng>,
    next_config: usize,
    env_obs_dim: usize,
}

fn env_err(env: &Env) -> impl FnOnce(EnvError) -> RolloutError + '_ {
    move |source| RolloutError::Env { config: env.config().name.clone(), source }
}

impl VecEnv {
    pub fn new(
        configs: Vec<EnvConfig>,
        episode: EpisodeParams,
        kind: ActionSpaceKind,
        workers: usize,
        seed: u64,
        combo_cap: usize,
    ) -> Result<Self, RolloutError> {
        if configs.is_empty() {
            return Err(RolloutError::NoConfigs);
        }
        if workers == 0 {
            return Err(RolloutError::NoWorkers);
        }
        let probe = Env::new(configs[0].clone(), episode);
        for c in &configs[1..] {
            let e = Env::new(c.clone(), episode);
            if e.catalog().len() != probe.catalog().len() || e.obs_dim() != probe.obs_dim() {
                return Err(RolloutError::MixedCatalogs(probe.catalog().len(), e.catalog().len()));
            }
        }
        let adapter = ActionAdapter::new(kind, probe.catalog(), combo_cap)?;
        let mut v = VecEnv {
            env_obs_dim: probe.obs_dim(),
            configs,
            episode,
            adapter,
            workers: Vec::with_capacity(workers),
            act_rngs: (0..workers).map(|i| seed::worker_act(seed, i)).collect(),
            next_config: 0,
        };
        for i in 0..workers {
            let id = v.take_config();
            let mut w = Worker {
                env: Env::new(v.configs[id].clone(), episode),
                config_id: id,
                buffer: SelectionBuffer::new(),
                env_obs: Vec::new(),
                ret: 0.0,
                reset_rng: seed::worker_reset(seed, i),
            };
            w.env_obs = w.env.reset_with(&mut w.reset_rng).map_err(env_err(&w.env))?;
            v.workers.push(w);
        }
        Ok(v)
    }

    fn take_config(&mut self) -> usize {
        let id = self.next_config % self.configs.len();
        self.next_config += 1;
        id
    }

    fn reset_worker(&mut self, i: usize) -> Result<(), RolloutError> {
        let id = self.take_config();
        let config = self.configs[id].clone();
        let w = &mut self.workers[i];
        if w.config_id != id {
            w.env = Env::new(config, self.episode);
            w.config_id = id;
        }
        w.buffer.clear();
        w.ret = 0.0;
        w.env_obs = w.env.reset_with(&mut w.reset_rng).map_err(env_err(&w.env))?;
        Ok(())
    }

    pub fn adapter(&self) -> &ActionAdapter {
        &self.adapter
    }

    /// Input size of the policy network.
    pub fn obs_dim(&self) -> usize {
        self.adapter.obs_dim(self.env_obs_dim)
    }

    pub fn workers(&self) -> usize {
        self.workers.len()
    }

    fn observations(&self) -> (Vec<Vec<f64>>, Vec<Option<Vec<bool>>>) {
        self.workers.iter().map(|w| (self.adapter.observe(&w.env_obs, &w.buffer), self.adapter.mask(&w.buffer))).unzip()
    }

    /// Collects `decisions` policy decisions (rounded up to a multiple of the
    /// worker count) and computes advantages. Episodes carry over between calls.
    pub fn collect(
        &mut self,
        net: &ActorCritic,
        decisions: usize,
        gamma: f64,
        lambda: f64,
    ) -> Result<Rollout, RolloutError> {
        let n = self.workers.len();
        let per_worker = decisions.div_ceil(n).max(1);
        let mut traj: Vec<Vec<Transition>> = vec![Vec::with_capacity(per_worker); n];
        let mut episodes = Vec::new();
        let mut env_steps = 0;
        for _ in 0..per_worker {
            let (obs, masks) = self.observations();
            let acts = net.act(&to_matrix(&obs), &masks, false, &mut self.act_rngs);
            let adapter = &self.adapter;
            let decided: Vec<Decision> =
                self.workers.iter_mut().zip(&acts).map(|(w, (a, _, _))| adapter.decide(a, &mut w.buffer)).collect();
            let results: Vec<Option<Result<StepResult, EnvError>>> = self
                .workers
                .par_iter_mut()
                .zip(decided.par_iter())
                .map(|(w, d)| match d {
                    Decision::Pending => None,
                    Decision::Execute(cmd) => Some(w.env.step_command(cmd)),
                })
                .collect();
            for (i, ((result, (action, log_prob, value)), (o, mask))) in
                results.into_iter().zip(acts).zip(obs.into_iter().zip(masks)).enumerate()
            {
                let (reward, done, g, l) = match result {
                    None => (0.0, false, 1.0, 1.0),
                    Some(r) => {
                        let w = &mut self.workers[i];
                        let r = r.map_err(env_err(&w.env))?;
                        env_steps += 1;
                        w.ret += r.reward;
                        w.env_obs = r.observation;
                        if r.done {
                            let term = r.termination.unwrap_or(Termination::Timeout);
                            episodes.push(EpisodeRecord {
                                config_id: w.config_id,
                                success: term == Termination::Success,
                                ret: w.ret,
                                steps: w.env.steps(),
                                termination: term,
                            });
                        }
                        (r.reward, r.done, gamma, lambda)
                    }
                };
                traj[i].push(Transition { obs: o, mask, action, log_prob, value, reward, done, gamma: g, lambda: l });
                if done {
                    self.reset_worker(i)?;
                }
            }
        }
        let (last_obs, _) = self.observations();
        let bootstrap = net.values(&to_matrix(&last_obs));
        let mut batch = Batch::default();
        for (t, b) in traj.into_iter().zip(bootstrap) {
            let col = |f: fn(&Transition) -> f64| t.iter().map(f).collect::<Vec<f64>>();
            let dones: Vec<bool> = t.iter().map(|x| x.done).collect();
            let (adv, ret) =
                gae_stepwise(&col(|x| x.reward), &col(|x| x.value), &dones, b, &col(|x| x.gamma), &col(|x| x.lambda));
            batch.advantages.extend(adv);
            batch.returns.extend(ret);
            for x in t {
                batch.obs.push(x.obs);
                batch.masks.push(x.mask);
                batch.actions.push(x.action);
                batch.log_probs.push(x.log_prob);
            }
        }
        Ok(Rollout { batch, episodes, env_steps })
    }
}

pub fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let cols = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}
