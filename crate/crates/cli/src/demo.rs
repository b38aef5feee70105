//! `axcomp demo`: one episode as a line-delimited JSON trajectory.
//!
//! Record kinds, one JSON object per line:
//! `header` once, then per environment step a `selection` followed by its
//! `physics` records, and a closing `episode`.

use std::fs;
use std::io::{BufWriter, Write};

use anyhow::{bail, Context, Result};
use axcomp_core::sim2d::catalog::label;
use axcomp_core::sim2d::{canonical, Command, Env, EpisodeParams, PhysicsRecord, Termination};
use axcomp_rl::{stream, Checkpoint, EpisodePolicy, NetPolicy, ScriptedPolicy};
use serde::Serialize;

use crate::eval::adapter_for;
use crate::manifest::load_config;
use crate::{out_root, DemoArgs};

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record<'a> {
    Header {
        task: &'a str,
        config: &'a str,
        policy: &'a str,
        seed: u64,
        period: usize,
        horizon: usize,
        catalog: &'a [String],
    },
    Selection {
        step: usize,
        physics_step: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        controllers: Option<&'a [usize]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<&'a str>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        end_effector: Option<[f64; 3]>,
    },
    Physics(&'a PhysicsRecord),
    Episode {
        steps: usize,
        termination: &'a str,
        success: bool,
        #[serde(rename = "return")]
        ret: f64,
    },
}

fn line<W: Write>(w: &mut W, r: &Record<'_>) -> Result<()> {
    serde_json::to_writer(&mut *w, r)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn run(a: &DemoArgs) -> Result<()> {
    let ckpt = match &a.checkpoint {
        Some(p) => Some(Checkpoint::load(p).with_context(|| format!("loading {}", p.display()))?),
        None => None,
    };
    let (task, period, name) = match (&ckpt, a.policy) {
        (Some(c), _) => {
            let stem = a
                .checkpoint
                .as_ref()
                .and_then(|p| p.file_stem())
                .map_or("checkpoint".into(), |s| s.to_string_lossy().into_owned());
            (c.state.task, c.state.period, stem)
        }
        (None, Some(p)) => (p.task(), a.t as usize, p.name().to_string()),
        (None, None) => bail!("give --policy or --checkpoint"),
    };
    let config = match &a.config {
        Some(p) => load_config(p)?,
        None => canonical(task),
    };
    if config.task != task {
        bail!("config `{}` is for {}, not {}", config.name, config.task.name(), task.name());
    }
    let episode = EpisodeParams::for_period(period);
    let mut env = Env::new(config.clone(), episode);
    let labels: Vec<String> = (0..env.catalog().len()).map(|i| label(task, config.walls.len(), i)).collect();

    let adapter = match &ckpt {
        Some(c) => Some(adapter_for(c, &config, episode)?),
        None => None,
    };
    let mut policy: Box<dyn EpisodePolicy + '_> = match (&ckpt, &adapter) {
        (Some(c), Some(ad)) => Box::new(NetPolicy::new(&c.net, ad, true, stream(a.seed, 0))),
        _ => Box::new(ScriptedPolicy(task)),
    };

    let out = a.out.clone().unwrap_or_else(|| out_root().join(format!("demo_{name}_seed{}.jsonl", a.seed)));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(fs::File::create(&out).with_context(|| format!("creating {}", out.display()))?);
    line(
        &mut w,
        &Record::Header {
            task: task.name(),
            config: &config.name,
            policy: &name,
            seed: a.seed,
            period,
            horizon: episode.horizon,
            catalog: &labels,
        },
    )?;

    let mut obs = env.reset(a.seed)?;
    policy.begin_episode();
    let mut ret = 0.0;
    let termination = loop {
        let cmd = policy.command(&env, &obs);
        let step = env.steps();
        let record = match &cmd {
            Command::Select(sel) => Record::Selection {
                step,
                physics_step: step * period,
                controllers: Some(sel.indices()),
                labels: Some(sel.indices().iter().map(|&i| labels[i].as_str()).collect()),
                end_effector: None,
            },
            Command::EndEffector(e) => Record::Selection {
                step,
                physics_step: step * period,
                controllers: None,
                labels: None,
                end_effector: Some(*e),
            },
        };
        line(&mut w, &record)?;
        let mut physics: Vec<u8> = Vec::new();
        let mut failed = None;
        let r = env.step_observed(&cmd, &mut |p| {
            if failed.is_none() {
                if let Err(e) = line(&mut physics, &Record::Physics(p)) {
                    failed = Some(e);
                }
            }
        })?;
        if let Some(e) = failed {
            return Err(e);
        }
        w.write_all(&physics)?;
        ret += r.reward;
        obs = r.observation;
        if r.done {
            break r.termination.unwrap_or(Termination::Timeout);
        }
    };
    line(
        &mut w,
        &Record::Episode {
            steps: env.steps(),
            termination: termination.name(),
            success: termination == Termination::Success,
            ret,
        },
    )?;
    w.flush()?;
    println!("{} after {} steps, wrote {}", termination.name(), env.steps(), out.display());
    Ok(())
}
