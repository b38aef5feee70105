//! Proximal policy optimization over the controller-selection action spaces.

pub mod adam;
pub mod agent;
pub mod checkpoint;
pub mod dist;
pub mod evaluate;
pub mod gae;
pub mod metrics;
pub mod mlp;
pub mod policy;
pub mod ppo;
pub mod rollout;
pub mod seed;
pub mod train;

pub use agent::ActionAdapter;
pub use checkpoint::{Checkpoint, CheckpointError, TrainState};
pub use evaluate::{evaluate, evaluate_net, EpisodePolicy, EvalRow, NetPolicy, ScriptedPolicy};
pub use metrics::{MetricRow, MetricsWriter};
pub use policy::{Action, ActorCritic, Architecture, Head};
pub use ppo::{PpoConfig, PpoError};
pub use rollout::{EpisodeRecord, VecEnv};
pub use seed::stream;
pub use train::{train, TrainEvent, TrainOutcome, TrainSpec};
