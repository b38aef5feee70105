//! Planar rigid-body simulation of the Block Fit and Block Push tasks.

pub mod body;
pub mod catalog;
pub mod config;
pub mod env;
pub mod physics;
pub mod reward;
pub mod scripted;

pub use catalog::{build_catalog, catalog_len, wall_slot, Slot};
pub use config::{canonical, config_set, EnvConfig, EpisodeParams, TaskKind, Wall};
pub use env::{obs_dim, Command, Env, EnvError, PhysicsRecord, StepResult, Termination};
pub use reward::{reward_block_fit, reward_block_push, Potentials};
