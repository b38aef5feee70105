//! Policy evaluation on fixed configuration sets.

use axcomp_core::actionspace::SelectionBuffer;
use axcomp_core::sim2d::scripted::{scripted_fit, scripted_push};
use axcomp_core::sim2d::{Command, Env, EnvConfig, EpisodeParams, TaskKind, Termination};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::agent::{ActionAdapter, Decision};
use crate::policy::ActorCritic;
use crate::rollout::{to_matrix, EpisodeRecord, RolloutError};
use crate::seed;

/// Anything that picks the next environment command.
pub trait EpisodePolicy {
    fn begin_episode(&mut self) {}
    fn command(&mut self, env: &Env, obs: &[f64]) -> Command;
}

/// A trained network behind an action-space adapter.
pub struct NetPolicy<'a> {
    pub net: &'a ActorCritic,
    pub adapter: &'a ActionAdapter,
    /// Take the mode (argmax or mean) instead of sampling.
    pub deterministic: bool,
    pub rng: ChaCha8Rng,
    buffer: SelectionBuffer,
}

impl<'a> NetPolicy<'a> {
    pub fn new(net: &'a ActorCritic, adapter: &'a ActionAdapter, deterministic: bool, rng: ChaCha8Rng) -> Self {
        NetPolicy { net, adapter, deterministic, rng, buffer: SelectionBuffer::new() }
    }
}

impl EpisodePolicy for NetPolicy<'_> {
    fn begin_episode(&mut self) {
        self.buffer.clear();
    }

    fn command(&mut self, _env: &Env, obs: &[f64]) -> Command {
        loop {
            let o = self.adapter.observe(obs, &self.buffer);
            let mask = self.adapter.mask(&self.buffer);
            let (a, _, _) = self
                .net
                .act(&to_matrix(&[o]), &[mask], self.deterministic, std::slice::from_mut(&mut self.rng))
                .remove(0);
            if let Decision::Execute(cmd) = self.adapter.decide(&a, &mut self.buffer) {
                return cmd;
            }
        }
    }
}

/// The hand-written controller sequences as a fixed policy.
pub struct ScriptedPolicy(pub TaskKind);

impl EpisodePolicy for ScriptedPolicy {
    fn command(&mut self, env: &Env, _obs: &[f64]) -> Command {
        Command::Select(match self.0 {
            TaskKind::BlockFit => scripted_fit(env),
            TaskKind::BlockPush => scripted_push(env),
        })
    }
}

/// Runs `episodes` episodes of `policy`, drawing start poses from `rng`.
pub fn run_episodes(
    policy: &mut dyn EpisodePolicy,
    config: &EnvConfig,
    episode: EpisodeParams,
    episodes: usize,
    rng: &mut ChaCha8Rng,
    config_id: usize,
) -> Result<Vec<EpisodeRecord>, RolloutError> {
    let mut env = Env::new(config.clone(), episode);
    let err = |source| RolloutError::Env { config: config.name.clone(), source };
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset_with(rng).map_err(err)?;
        policy.begin_episode();
        let mut ret = 0.0;
        loop {
            let cmd = policy.command(&env, &obs);
            let r = env.step_command(&cmd).map_err(err)?;
            ret += r.reward;
            obs = r.observation;
            if r.done {
                let term = r.termination.unwrap_or(Termination::Timeout);
                out.push(EpisodeRecord {
                    config_id,
                    success: term == Termination::Success,
                    ret,
                    steps: env.steps(),
                    termination: term,
                });
                break;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub config_id: usize,
    pub config: String,
    pub split: String,
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
}

impl EvalRow {
    pub fn from_records(config_id: usize, config: &EnvConfig, records: &[EpisodeRecord]) -> Self {
        let n = records.len().max(1) as f64;
        EvalRow {
            config_id,
            config: config.name.clone(),
            split: config.split.clone(),
            episodes: records.len(),
            success_rate: records.iter().filter(|r| r.success).count() as f64 / n,
            mean_return: records.iter().map(|r| r.ret).sum::<f64>() / n,
        }
    }
}

/// One row per configuration. Config `i` draws its start poses from its own
/// stream, so results do not depend on how the work is scheduled.
pub fn evaluate<P, F>(
    make_policy: F,
    configs: &[EnvConfig],
    episode: EpisodeParams,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EvalRow>, RolloutError>
where
    P: EpisodePolicy,
    F: Fn(usize) -> P + Sync,
{
    configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = seed::stream(seed, seed::EVAL + ((i as u64 + 1) << 16));
            let mut policy = make_policy(i);
            let records = run_episodes(&mut policy, c, episode, episodes, &mut rng, i)?;
            Ok(EvalRow::from_records(i, c, &records))
        })
        .collect()
}

/// Deterministic evaluation of a network.
pub fn evaluate_net(
    net: &ActorCritic,
    adapter: &ActionAdapter,
    configs: &[EnvConfig],
    episode: EpisodeParams,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EvalRow>, RolloutError> {
    evaluate(|_| NetPolicy::new(net, adapter, true, seed::stream(seed, 0)), configs, episode, episodes, seed)
}

pub fn mean_success(rows: &[EvalRow]) -> f64 {
    rows.iter().map(|r| r.success_rate).sum::<f64>() / rows.len().max(1) as f64
}
