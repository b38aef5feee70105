//! `axcomp eval`.

use std::fs;

use anyhow::{bail, Context, Result};
use axcomp_core::sim2d::{Env, EnvConfig, EpisodeParams};
use axcomp_rl::evaluate::mean_success;
use axcomp_rl::{evaluate_net, ActionAdapter, Architecture, Checkpoint};

use crate::manifest::resolve_configs;
use crate::EvalArgs;

/// The adapter the checkpoint's network expects on `config`, or an error
/// when the shapes disagree.
pub fn adapter_for(ckpt: &Checkpoint, config: &EnvConfig, episode: EpisodeParams) -> Result<ActionAdapter> {
    let env = Env::new(config.clone(), episode);
    // The table size is fixed by the catalog; the cap only matters when training.
    let adapter = ActionAdapter::new(ckpt.state.action_space, env.catalog(), usize::MAX)?;
    let want = Architecture {
        obs_dim: adapter.obs_dim(env.obs_dim()),
        hidden: ckpt.net.arch.hidden.clone(),
        head: adapter.head(),
    };
    if want != ckpt.net.arch {
        bail!("checkpoint network {:?} does not fit config `{}` (needs {:?})", ckpt.net.arch, config.name, want);
    }
    Ok(adapter)
}

pub fn run(a: &EvalArgs) -> Result<()> {
    let ckpt = Checkpoint::load(&a.checkpoint).with_context(|| format!("loading {}", a.checkpoint.display()))?;
    let task = a.task.unwrap_or(ckpt.state.task);
    let kind = a.action_space.unwrap_or(ckpt.state.action_space);
    ckpt.expect(task, kind)?;
    let configs = resolve_configs(task, &a.config_set)?;
    let episode = EpisodeParams::for_period(ckpt.state.period);
    let mut adapter = None;
    for c in &configs {
        adapter = Some(adapter_for(&ckpt, c, episode)?);
    }
    let adapter = adapter.expect("at least one config");
    let rows = evaluate_net(&ckpt.net, &adapter, &configs, episode, a.episodes as usize, a.seed)?;

    let out = match &a.out {
        Some(p) => p.clone(),
        None => a.checkpoint.with_file_name("eval.csv"),
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&out).with_context(|| format!("writing {}", out.display()))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let mut splits: Vec<&str> = Vec::new();
    for r in &rows {
        if !splits.contains(&r.split.as_str()) {
            splits.push(&r.split);
        }
    }
    for s in splits {
        let part: Vec<_> = rows.iter().filter(|r| r.split == s).cloned().collect();
        println!("{s}: success {:.3} over {} configs", mean_success(&part), part.len());
    }
    println!("wrote {}", out.display());
    Ok(())
}
