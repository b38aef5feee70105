//! `axcomp train`.

use std::fs::{self, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use axcomp_rl::metrics::HEADER;
use axcomp_rl::{train, Checkpoint, MetricsWriter, TrainEvent, TrainSpec};
use serde::Serialize;

use crate::manifest::{RunManifest, MANIFEST_FILE, MANIFEST_VERSION};
use crate::{out_root, TrainArgs};

pub const METRICS_FILE: &str = "metrics.csv";
pub const LATEST: &str = "latest.ckpt";
pub const BEST: &str = "best.ckpt";
pub const OUTCOME_FILE: &str = "outcome.json";

/// Written when a seed finishes; its presence marks the seed as done.
#[derive(Debug, Serialize)]
struct Outcome {
    env_steps: u64,
    updates: u64,
    final_success: Option<f64>,
    best_success: Option<f64>,
    diverged: Option<String>,
}

pub fn manifest_from_args(a: &TrainArgs) -> Result<RunManifest> {
    if let Some(path) = &a.manifest {
        let mut m = RunManifest::load(path)?;
        if let Some(out) = &a.out {
            m.out = out.clone();
        }
        return Ok(m);
    }
    let task = a.task.context("--task is required")?;
    let out =
        a.out.clone().unwrap_or_else(|| out_root().join(format!("{}_{}_t{}", task.name(), a.action_space.name(), a.t)));
    Ok(RunManifest {
        format_version: MANIFEST_VERSION,
        task,
        action_space: a.action_space,
        period: a.t as usize,
        config_sets: a.config_set.clone(),
        seeds: a.seeds.clone(),
        overrides: a.overrides.iter().cloned().collect(),
        out,
    })
}

pub fn run(a: &TrainArgs) -> Result<()> {
    let manifest = manifest_from_args(a)?;
    let specs = manifest.specs()?;
    write_manifest(&manifest)?;
    for spec in &specs {
        train_seed(&manifest, spec, a.quiet)?;
    }
    Ok(())
}

/// Refuses to mix two different runs in one directory.
fn write_manifest(m: &RunManifest) -> Result<()> {
    fs::create_dir_all(&m.out).with_context(|| format!("creating {}", m.out.display()))?;
    let path = m.out.join(MANIFEST_FILE);
    if path.exists() {
        let mut old = RunManifest::load(&path)?;
        old.out = m.out.clone();
        if &old != m {
            bail!("{} holds a different run; pick another --out", m.out.display());
        }
        return Ok(());
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, m.to_toml())?;
    fs::rename(&tmp, &path)?;
    Ok(())
}

/// Keeps the header and the rows logged up to `step`; returns the best mean
/// success among them.
fn truncate_metrics(path: &Path, step: u64) -> Result<Option<f64>> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut kept = Vec::new();
    let mut best: Option<f64> = None;
    for rec in reader.records() {
        let rec = rec?;
        let row_step: u64 = rec.get(0).unwrap_or("").parse().context("bad step column")?;
        if row_step > step {
            continue;
        }
        if rec.get(1) == Some("mean") {
            let s: f64 = rec.get(2).unwrap_or("").parse().context("bad success column")?;
            best = Some(best.map_or(s, |b| b.max(s)));
        }
        kept.push(rec);
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for r in kept {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(best)
}

fn train_seed(m: &RunManifest, spec: &TrainSpec, quiet: bool) -> Result<()> {
    let dir = m.seed_dir(spec.seed);
    fs::create_dir_all(&dir)?;
    if dir.join(OUTCOME_FILE).exists() {
        if !quiet {
            eprintln!("seed {}: already finished", spec.seed);
        }
        return Ok(());
    }
    let latest = dir.join(LATEST);
    let metrics_path = dir.join(METRICS_FILE);
    let resume = if latest.exists() {
        Some(Checkpoint::load(&latest).with_context(|| format!("loading {}", latest.display()))?)
    } else {
        None
    };

    let (file, mut best) = match &resume {
        Some(c) if metrics_path.exists() => {
            if !quiet {
                eprintln!("seed {}: resuming at step {}", spec.seed, c.state.env_steps);
            }
            let best = truncate_metrics(&metrics_path, c.state.env_steps)?;
            (OpenOptions::new().append(true).open(&metrics_path)?, best)
        }
        _ => (fs::File::create(&metrics_path)?, None),
    };
    let mut writer = match (&resume, metrics_path.metadata()?.len()) {
        (Some(_), n) if n > 0 => MetricsWriter::append(BufWriter::new(file)),
        _ => MetricsWriter::new(BufWriter::new(file))?,
    };

    let mut last_mean = None;
    let seed = spec.seed;
    let mut sink = |event: TrainEvent<'_>| -> io::Result<()> {
        match event {
            TrainEvent::Metrics(rows) => {
                writer.write(rows)?;
                last_mean = rows.last().map(|r| r.success_rate);
                if !quiet {
                    if let Some(r) = rows.last() {
                        eprintln!(
                            "seed {seed}: step {} success {:.3} return {:.3}",
                            r.step, r.success_rate, r.mean_return
                        );
                    }
                }
            }
            TrainEvent::Checkpoint { checkpoint, .. } => {
                checkpoint.save(&latest).map_err(io::Error::other)?;
                if let Some(s) = last_mean.take() {
                    if best.is_none_or(|b| s > b) {
                        best = Some(s);
                        checkpoint.save(&dir.join(BEST)).map_err(io::Error::other)?;
                    }
                }
            }
        }
        Ok(())
    };
    let outcome = train(spec, resume, &mut sink)?;

    if let Some(e) = &outcome.diverged {
        eprintln!("seed {}: training stopped early: {e}", spec.seed);
    }
    let summary = Outcome {
        env_steps: outcome.checkpoint.state.env_steps,
        updates: outcome.checkpoint.state.updates,
        final_success: outcome.final_success(),
        best_success: best,
        diverged: outcome.diverged.as_ref().map(|e| e.to_string()),
    };
    let mut f = fs::File::create(dir.join(OUTCOME_FILE))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}
