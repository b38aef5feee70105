//! Declarative environment configurations and the shipped train/test sets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::body::Vec2;
use super::physics::{PhysicsParams, Scene};
use crate::geom::Vec3;

pub const CONFIG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported config format version {0} (expected {CONFIG_FORMAT_VERSION})")]
    Version(u32),
    #[error("invalid config `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("unknown config set `{0}`")]
    UnknownSet(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    BlockFit,
    BlockPush,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::BlockFit => "block_fit",
            TaskKind::BlockPush => "block_push",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "block_fit" => Some(TaskKind::BlockFit),
            "block_push" => Some(TaskKind::BlockPush),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallDef {
    pub p0: [f64; 2],
    pub p1: [f64; 2],
}

/// Wall quantities the controllers are built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wall {
    pub p0: Vec3,
    pub p1: Vec3,
    /// `x_wm`.
    pub center: Vec3,
    /// `v`, pointing into the solid side.
    pub normal: Vec3,
    /// `v'`, the chain direction `p0 -> p1`.
    pub tangent: Vec3,
    /// `x_wc`, the corner shared with the next wall.
    pub corner: Vec3,
}

impl Wall {
    pub fn from_def(d: &WallDef) -> Self {
        let p0 = Vec3::new(d.p0[0], d.p0[1], 0.0);
        let p1 = Vec3::new(d.p1[0], d.p1[1], 0.0);
        let tangent = (p1 - p0).normalize();
        Wall { p0, p1, center: (p0 + p1) * 0.5, normal: Vec3::new(tangent.y, -tangent.x, 0.0), tangent, corner: p1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDef {
    pub width: f64,
    pub mass: f64,
}

/// Axis-aligned sampling box for an initial pose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRange {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default)]
    pub angle: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuccessDef {
    pub distance: f64,
    /// Ignored for Block Push.
    #[serde(default)]
    pub angle_deg: f64,
}

/// One environment configuration as stored on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub format_version: u32,
    pub name: String,
    pub task: TaskKind,
    /// `train`, `test_small` or `test_large`.
    pub split: String,
    /// Goal pose `(x, y, angle)`; the angle is only scored in Block Fit.
    pub goal: [f64; 3],
    pub goal_wall: usize,
    pub walls: Vec<WallDef>,
    pub robot: BlockDef,
    #[serde(default)]
    pub target: Option<BlockDef>,
    pub robot_start: PoseRange,
    #[serde(default)]
    pub target_start: Option<PoseRange>,
    #[serde(default)]
    pub gravity: [f64; 2],
    pub success: SuccessDef,
    /// Target block below this height ends the episode.
    #[serde(default)]
    pub fall_line: Option<f64>,
    #[serde(default)]
    pub physics: PhysicsParams,
}

impl EnvConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: EnvConfig = toml::from_str(text)?;
        if cfg.format_version != CONFIG_FORMAT_VERSION {
            return Err(ConfigError::Version(cfg.format_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::Invalid { name: self.name.clone(), reason };
        if self.walls.is_empty() {
            return Err(bad("no walls".into()));
        }
        for (i, w) in self.walls.iter().enumerate() {
            let len = ((w.p1[0] - w.p0[0]).powi(2) + (w.p1[1] - w.p0[1]).powi(2)).sqrt();
            if !(len > 1e-9) {
                return Err(bad(format!("wall {i} has zero length")));
            }
        }
        if self.goal_wall >= self.walls.len() {
            return Err(bad(format!("goal wall {} out of range", self.goal_wall)));
        }
        if !(self.success.distance > 0.0) {
            return Err(bad("success distance must be positive".into()));
        }
        if self.task == TaskKind::BlockFit && !(self.success.angle_deg > 0.0) {
            return Err(bad("success angle must be positive".into()));
        }
        if !(self.robot.width > 0.0 && self.robot.mass > 0.0) {
            return Err(bad("robot width and mass must be positive".into()));
        }
        let p = &self.physics;
        if !(p.dt > 0.0)
            || p.substeps == 0
            || !(p.stiffness > 0.0)
            || !(p.max_depth > 0.0)
            || !(p.stick_gain > 0.0 && p.stick_gain <= 1.0)
        {
            return Err(bad("physics parameters must be positive".into()));
        }
        let ranges = std::iter::once(&self.robot_start).chain(self.target_start.as_ref());
        for r in ranges {
            if r.x[0] > r.x[1] || r.y[0] > r.y[1] || r.angle[0] > r.angle[1] {
                return Err(bad("empty start range".into()));
            }
        }
        match self.task {
            TaskKind::BlockPush => match (&self.target, &self.target_start) {
                (Some(t), Some(_)) if t.width > 0.0 && t.mass > 0.0 => {}
                _ => return Err(bad("block push needs a target block and its start range".into())),
            },
            TaskKind::BlockFit => {
                if self.target.is_some() {
                    return Err(bad("block fit has no target block".into()));
                }
            }
        }
        Ok(())
    }

    pub fn walls(&self) -> Vec<Wall> {
        self.walls.iter().map(Wall::from_def).collect()
    }

    pub fn scene(&self) -> Scene {
        let pts: Vec<(Vec2, Vec2)> =
            self.walls.iter().map(|w| (Vec2::new(w.p0[0], w.p0[1]), Vec2::new(w.p1[0], w.p1[1]))).collect();
        Scene::new(&pts)
    }

    pub fn gravity(&self) -> Vec2 {
        Vec2::new(self.gravity[0], self.gravity[1])
    }
}

/// Physics steps per selection and selections per episode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeParams {
    pub period: usize,
    pub horizon: usize,
}

impl EpisodeParams {
    /// Horizon 100 at T = 10 and 15 at T = 80; other periods keep roughly
    /// the same number of physics steps as T = 10.
    pub fn for_period(period: usize) -> Self {
        let horizon = match period {
            10 => 100,
            80 => 15,
            t => 1000usize.div_ceil(t.max(1)),
        };
        EpisodeParams { period, horizon }
    }
}

impl Default for EpisodeParams {
    fn default() -> Self {
        EpisodeParams::for_period(10)
    }
}

macro_rules! embedded {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../../../../configs/", $path)))),*]
    };
}

static EMBEDDED: &[(&str, &str)] = embedded![
    "block_fit/train_0.toml",
    "block_fit/train_1.toml",
    "block_fit/train_2.toml",
    "block_fit/train_3.toml",
    "block_fit/train_4.toml",
    "block_fit/train_5.toml",
    "block_fit/train_6.toml",
    "block_fit/train_7.toml",
    "block_fit/test_small_0.toml",
    "block_fit/test_small_1.toml",
    "block_fit/test_small_2.toml",
    "block_fit/test_small_3.toml",
    "block_fit/test_small_4.toml",
    "block_fit/test_large_0.toml",
    "block_fit/test_large_1.toml",
    "block_fit/test_large_2.toml",
    "block_fit/test_large_3.toml",
    "block_push/train_0.toml",
    "block_push/train_1.toml",
    "block_push/train_2.toml",
    "block_push/train_3.toml",
    "block_push/train_4.toml",
    "block_push/train_5.toml",
    "block_push/train_6.toml",
    "block_push/train_7.toml",
    "block_push/train_8.toml",
    "block_push/train_9.toml",
    "block_push/train_10.toml",
    "block_push/test_small_0.toml",
    "block_push/test_small_1.toml",
    "block_push/test_small_2.toml",
    "block_push/test_small_3.toml",
    "block_push/test_large_0.toml",
    "block_push/test_large_1.toml",
    "block_push/test_large_2.toml",
    "block_push/test_large_3.toml",
];

pub const SPLITS: [&str; 3] = ["train", "test_small", "test_large"];

/// Shipped configs of one task and split, in file order.
pub fn config_set(task: TaskKind, split: &str) -> Result<Vec<EnvConfig>, ConfigError> {
    if !SPLITS.contains(&split) {
        return Err(ConfigError::UnknownSet(split.to_string()));
    }
    let prefix = format!("{}/{}_", task.name(), split);
    let mut out: Vec<(usize, EnvConfig)> = Vec::new();
    for (path, text) in EMBEDDED {
        if let Some(rest) = path.strip_prefix(&prefix) {
            let idx: usize = rest.trim_end_matches(".toml").parse().expect("numbered config file");
            out.push((idx, EnvConfig::from_toml(text)?));
        }
    }
    out.sort_by_key(|(i, _)| *i);
    Ok(out.into_iter().map(|(_, c)| c).collect())
}

/// The configuration scripted policies are validated on.
pub fn canonical(task: TaskKind) -> EnvConfig {
    config_set(task, "train").expect("embedded configs parse").remove(0)
}
