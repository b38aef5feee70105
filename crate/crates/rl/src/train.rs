//! The training loop: collect, update, log, checkpoint.

use std::io;

use axcomp_core::actionspace::ActionSpaceKind;
use axcomp_core::sim2d::{EnvConfig, EpisodeParams, TaskKind};
use thiserror::Error;

use crate::checkpoint::{Checkpoint, CheckpointError, TrainState};
use crate::metrics::{summarize, LossSummary, MetricRow};
use crate::policy::{ActorCritic, Architecture};
use crate::ppo::{new_optimizer, ppo_update, PpoConfig, PpoError};
use crate::rollout::{EpisodeRecord, RolloutError, VecEnv};
use crate::seed;

#[derive(Clone, Debug)]
pub struct TrainSpec {
    pub task: TaskKind,
    pub action_space: ActionSpaceKind,
    /// Physics steps per controller selection.
    pub period: usize,
    pub configs: Vec<EnvConfig>,
    pub ppo: PpoConfig,
    pub seed: u64,
    /// Budget in environment steps (selections executed).
    pub total_env_steps: u64,
    /// Parallel environments. Part of the run identity: changing it changes results.
    pub workers: usize,
    /// Metrics and checkpoints every this many environment steps.
    pub log_every: u64,
    pub combo_cap: usize,
    /// Stop at the first log point whose mean success reaches this value.
    pub target_success: Option<f64>,
}

impl TrainSpec {
    pub fn new(
        task: TaskKind,
        action_space: ActionSpaceKind,
        period: usize,
        configs: Vec<EnvConfig>,
        seed: u64,
    ) -> Self {
        let ppo = match task {
            TaskKind::BlockFit => PpoConfig::block_fit(),
            TaskKind::BlockPush => PpoConfig::block_push(),
        };
        TrainSpec {
            task,
            action_space,
            period,
            configs,
            ppo,
            seed,
            total_env_steps: 60_000,
            workers: 8,
            log_every: 2_000,
            combo_cap: 200_000,
            target_success: None,
        }
    }

    pub fn episode(&self) -> EpisodeParams {
        EpisodeParams::for_period(self.period)
    }
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("writing outputs: {0}")]
    Io(#[from] io::Error),
}

pub enum TrainEvent<'a> {
    Metrics(&'a [MetricRow]),
    /// Emitted at every log point; `best` marks a new best mean success.
    Checkpoint {
        checkpoint: &'a Checkpoint,
        best: bool,
    },
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<MetricRow>,
    /// Set when an update produced a non-finite loss; training stopped there
    /// and `checkpoint` holds the last good parameters.
    pub diverged: Option<PpoError>,
}

impl TrainOutcome {
    /// Mean success of the last logged block.
    pub fn final_success(&self) -> Option<f64> {
        self.metrics.iter().rev().find(|r| r.config_id == "mean").map(|r| r.success_rate)
    }
}

#[derive(Default)]
struct LossAccum {
    sum: LossSummary,
    n: f64,
}

impl LossAccum {
    fn take(&mut self, clip: f64) -> LossSummary {
        let n = self.n.max(1.0);
        let s = LossSummary {
            policy_loss: self.sum.policy_loss / n,
            value_loss: self.sum.value_loss / n,
            entropy: self.sum.entropy / n,
            clip_range: clip,
        };
        *self = LossAccum::default();
        s
    }
}

pub fn train(
    spec: &TrainSpec,
    resume: Option<Checkpoint>,
    sink: &mut dyn FnMut(TrainEvent<'_>) -> io::Result<()>,
) -> Result<TrainOutcome, TrainError> {
    spec.ppo.validate().map_err(TrainError::Invalid)?;
    if spec.log_every == 0 {
        return Err(TrainError::Invalid("log interval must be positive".into()));
    }
    let episode = spec.episode();
    let resumed_updates = resume.as_ref().map_or(0, |c| c.state.updates);
    // A resumed run starts fresh episodes from streams keyed by the update count.
    let env_seed = spec.seed ^ resumed_updates.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut venv =
        VecEnv::new(spec.configs.clone(), episode, spec.action_space, spec.workers, env_seed, spec.combo_cap)?;
    let arch = Architecture { obs_dim: venv.obs_dim(), hidden: spec.ppo.hidden.clone(), head: venv.adapter().head() };

    let (mut net, mut adam, mut state) = match resume {
        Some(c) => {
            c.expect(spec.task, spec.action_space)?;
            if c.net.arch != arch || c.state.period != spec.period {
                return Err(TrainError::Invalid(format!(
                    "checkpoint architecture {:?} at T={} does not match {:?} at T={}",
                    c.net.arch, c.state.period, arch, spec.period
                )));
            }
            let adam = c.adam.unwrap_or_else(|| new_optimizer(&c.net, spec.ppo.learning_rate));
            (c.net, adam, c.state)
        }
        None => {
            let net = ActorCritic::new(arch, &mut seed::stream(spec.seed, seed::INIT));
            let adam = new_optimizer(&net, spec.ppo.learning_rate);
            let state = TrainState {
                task: spec.task,
                action_space: spec.action_space,
                period: spec.period,
                seed: spec.seed,
                env_steps: 0,
                updates: 0,
                clip: spec.ppo.clip_init,
                ppo: spec.ppo.clone(),
            };
            (net, adam, state)
        }
    };
    adam.lr = spec.ppo.learning_rate;

    let mut metrics = Vec::new();
    let mut window: Vec<EpisodeRecord> = Vec::new();
    let mut losses = LossAccum::default();
    let mut best = f64::NEG_INFINITY;
    let mut next_log = (state.env_steps / spec.log_every + 1) * spec.log_every;
    let mut diverged = None;
    let snapshot = |net: &ActorCritic, adam, state: &TrainState| Checkpoint {
        net: net.clone(),
        state: state.clone(),
        adam: Some(adam),
    };

    while state.env_steps < spec.total_env_steps {
        let rollout = venv.collect(&net, spec.ppo.rollout_len, spec.ppo.gamma, spec.ppo.lambda)?;
        let mut shuffle = seed::stream(spec.seed, seed::SHUFFLE + (state.updates << 8));
        let mut clip = state.clip;
        match ppo_update(&mut net, &mut adam, &rollout.batch, &spec.ppo, &mut clip, &mut shuffle) {
            Ok(stats) => {
                losses.sum.policy_loss += stats.loss.policy;
                losses.sum.value_loss += stats.loss.value;
                losses.sum.entropy += stats.loss.entropy;
                losses.n += 1.0;
            }
            Err(e) => {
                diverged = Some(e);
                break;
            }
        }
        state.clip = clip;
        state.updates += 1;
        state.env_steps += rollout.env_steps;
        window.extend(rollout.episodes);

        if state.env_steps >= next_log || state.env_steps >= spec.total_env_steps {
            let rows = summarize(state.env_steps, spec.configs.len(), &window, losses.take(state.clip));
            window.clear();
            sink(TrainEvent::Metrics(&rows))?;
            let success = rows.last().map_or(f64::NEG_INFINITY, |r| r.success_rate);
            metrics.extend(rows);
            let is_best = success > best;
            best = best.max(success);
            sink(TrainEvent::Checkpoint { checkpoint: &snapshot(&net, adam.clone(), &state), best: is_best })?;
            while next_log <= state.env_steps {
                next_log += spec.log_every;
            }
            if spec.target_success.is_some_and(|t| success >= t) {
                break;
            }
        }
    }
    let checkpoint = snapshot(&net, adam, &state);
    if diverged.is_some() {
        sink(TrainEvent::Checkpoint { checkpoint: &checkpoint, best: false })?;
    }
    Ok(TrainOutcome { checkpoint, metrics, diverged })
}
