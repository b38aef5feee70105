//! `axcomp` command-line entry points.

pub mod demo;
pub mod eval;
pub mod manifest;
pub mod train;

use std::path::PathBuf;

use axcomp_core::actionspace::ActionSpaceKind;
use axcomp_core::sim2d::TaskKind;
use clap::{Args, Parser, Subcommand};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "AXCOMP_OUT";

#[derive(Debug, Parser)]
#[command(name = "axcomp", version, about = "Train, evaluate and replay controller-selection policies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one policy per seed; resumes from each seed's latest checkpoint.
    Train(TrainArgs),
    /// Per-config success table of a checkpoint.
    Eval(EvalArgs),
    /// Roll out one episode and write a line-delimited trajectory dump.
    Demo(DemoArgs),
}

pub fn parse_task(s: &str) -> Result<TaskKind, String> {
    TaskKind::parse(s).ok_or_else(|| format!("unknown task `{s}` (expected block_fit or block_push)"))
}

pub fn parse_action_space(s: &str) -> Result<ActionSpaceKind, String> {
    s.parse().map_err(|e: axcomp_core::actionspace::ActionSpaceError| e.to_string())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Replay a saved manifest; other run flags are then not allowed.
    #[arg(long, conflicts_with_all = ["task", "action_space", "t", "seeds", "config_set", "overrides"])]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_parser = parse_task, required_unless_present = "manifest")]
    pub task: Option<TaskKind>,
    #[arg(long, value_parser = parse_action_space, default_value = "exp_single")]
    pub action_space: ActionSpaceKind,
    /// Physics steps per controller selection.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub t: u64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub seeds: Vec<u64>,
    /// Shipped split names or config paths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "train")]
    pub config_set: Vec<String>,
    /// Run directory. Defaults to `$AXCOMP_OUT/<task>_<action space>_t<T>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE", value_parser = manifest::split_override)]
    pub overrides: Vec<(String, String)>,
    /// Print nothing while training.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Episodes per configuration.
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    pub episodes: u64,
    #[arg(long, value_delimiter = ',', default_value = "train,test_small,test_large")]
    pub config_set: Vec<String>,
    /// Fails unless the checkpoint was trained for this task.
    #[arg(long, value_parser = parse_task)]
    pub task: Option<TaskKind>,
    /// Fails unless the checkpoint was trained for this action space.
    #[arg(long, value_parser = parse_action_space)]
    pub action_space: Option<ActionSpaceKind>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV path. Defaults to `eval.csv` next to the checkpoint.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ScriptName {
    ScriptedFit,
    ScriptedPush,
}

impl ScriptName {
    pub fn name(self) -> &'static str {
        match self {
            ScriptName::ScriptedFit => "scripted_fit",
            ScriptName::ScriptedPush => "scripted_push",
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            ScriptName::ScriptedFit => TaskKind::BlockFit,
            ScriptName::ScriptedPush => TaskKind::BlockPush,
        }
    }
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum, required_unless_present = "checkpoint", conflicts_with = "checkpoint")]
    pub policy: Option<ScriptName>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Start-pose seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Config file; defaults to the task's canonical layout.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Selection period for scripted policies (checkpoints use their own).
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub t: u64,
    /// Dump path. Defaults to `$AXCOMP_OUT/demo_<policy>_seed<seed>.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `$AXCOMP_OUT`, or `runs` when unset.
pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(a) => train::run(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Demo(a) => demo::run(&a),
    }
}
