//! Run manifests: everything needed to replay a training run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use axcomp_core::actionspace::ActionSpaceKind;
use axcomp_core::sim2d::config::{config_set, SPLITS};
use axcomp_core::sim2d::{EnvConfig, TaskKind};
use axcomp_rl::TrainSpec;
use serde::{Deserialize, Serialize};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub format_version: u32,
    pub task: TaskKind,
    pub action_space: ActionSpaceKind,
    /// Physics steps per controller selection.
    pub period: usize,
    /// Shipped split names, or paths to a config file or a directory of them.
    pub config_sets: Vec<String>,
    pub seeds: Vec<u64>,
    /// `key = value` overrides applied on top of the task defaults.
    #[serde(default)]
    pub overrides: BTreeMap<String, String>,
    pub out: PathBuf,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: RunManifest = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if m.format_version != MANIFEST_VERSION {
            bail!("manifest format {} is not supported (expected {MANIFEST_VERSION})", m.format_version);
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.out.join(format!("seed_{seed}"))
    }

    /// Training specs, one per seed, with every override applied.
    pub fn specs(&self) -> Result<Vec<TrainSpec>> {
        if self.seeds.is_empty() {
            bail!("no seeds given");
        }
        if self.period == 0 {
            bail!("selection period must be positive");
        }
        let configs = resolve_configs(self.task, &self.config_sets)?;
        let mut base = TrainSpec::new(self.task, self.action_space, self.period, configs, 0);
        for (k, v) in &self.overrides {
            apply_override(&mut base, k, v).with_context(|| format!("override `{k}={v}`"))?;
        }
        base.ppo.validate().map_err(anyhow::Error::msg)?;
        Ok(self.seeds.iter().map(|&seed| TrainSpec { seed, ..base.clone() }).collect())
    }
}

fn parse<T: std::str::FromStr>(v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow::anyhow!("cannot parse `{v}`"))
}

/// PPO keys plus the run-level `total_env_steps`, `workers`, `log_every`,
/// `combo_cap` and `target_success`.
pub fn apply_override(spec: &mut TrainSpec, key: &str, value: &str) -> Result<()> {
    if spec.ppo.set(key, value).map_err(anyhow::Error::msg)? {
        return Ok(());
    }
    match key {
        "total_env_steps" => spec.total_env_steps = parse(value)?,
        "workers" => {
            spec.workers = parse(value)?;
            if spec.workers == 0 {
                bail!("need at least one worker");
            }
        }
        "log_every" => spec.log_every = parse(value)?,
        "combo_cap" => spec.combo_cap = parse(value)?,
        "target_success" => spec.target_success = Some(parse(value)?),
        _ => bail!("unknown key"),
    }
    Ok(())
}

/// Parses `key=value`.
pub fn split_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got `{s}`"))?;
    if k.trim().is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Configs named by `ids`, in order. Each id is a shipped split or a path.
pub fn resolve_configs(task: TaskKind, ids: &[String]) -> Result<Vec<EnvConfig>> {
    if ids.is_empty() {
        bail!("no config sets given");
    }
    let mut out = Vec::new();
    for id in ids {
        if SPLITS.contains(&id.as_str()) {
            out.extend(config_set(task, id)?);
            continue;
        }
        let path = Path::new(id);
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("listing {id}"))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            files.sort();
            if files.is_empty() {
                bail!("no .toml configs in {id}");
            }
            for f in files {
                out.push(load_config(&f)?);
            }
        } else if path.is_file() {
            out.push(load_config(path)?);
        } else {
            bail!("`{id}` is neither a config set ({}) nor an existing path", SPLITS.join(", "));
        }
    }
    if let Some(c) = out.iter().find(|c| c.task != task) {
        bail!("config `{}` is for {}, not {}", c.name, c.task.name(), task.name());
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<EnvConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    EnvConfig::from_toml(&text).with_context(|| format!("loading {}", path.display()))
}
