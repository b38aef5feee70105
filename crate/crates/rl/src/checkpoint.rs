//! Binary checkpoints: magic, format version, a JSON header describing the
//! architecture and training state, then raw little-endian `f64` arrays.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use axcomp_core::actionspace::ActionSpaceKind;
use axcomp_core::sim2d::TaskKind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adam::Adam;
use crate::mlp::{Mlp, MlpShape};
use crate::policy::{ActorCritic, Architecture};
use crate::ppo::PpoConfig;

pub const MAGIC: &[u8; 8] = b"AXCMPCKP";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file")]
    BadMagic,
    #[error("checkpoint format {0} is not supported (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint was trained for {got}, but {expected} was requested")]
    Mismatch { expected: String, got: String },
}

/// Run state saved alongside the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub task: TaskKind,
    pub action_space: ActionSpaceKind,
    pub period: usize,
    pub seed: u64,
    pub env_steps: u64,
    pub updates: u64,
    pub clip: f64,
    pub ppo: PpoConfig,
}

#[derive(Serialize, Deserialize)]
struct Header {
    arch: Architecture,
    state: TrainState,
    adam: Option<AdamHeader>,
    sections: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AdamHeader {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub net: ActorCritic,
    pub state: TrainState,
    pub adam: Option<Adam>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut arrays: Vec<&[f64]> = vec![&self.net.policy.params, &self.net.value.params, &self.net.log_std];
        if let Some(a) = &self.adam {
            arrays.extend(a.m.iter().map(Vec::as_slice));
            arrays.extend(a.v.iter().map(Vec::as_slice));
        }
        let header = Header {
            arch: self.net.arch.clone(),
            state: self.state.clone(),
            adam: self.adam.as_ref().map(|a| AdamHeader {
                lr: a.lr,
                beta1: a.beta1,
                beta2: a.beta2,
                eps: a.eps,
                t: a.t,
            }),
            sections: arrays.iter().map(|a| a.len()).collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(json.len() + 8 * arrays.iter().map(|a| a.len()).sum::<usize>() + 20);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for a in arrays {
            for v in a {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let corrupt = |m: &str| CheckpointError::Corrupt(m.to_string());
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hlen = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = bytes.get(20..).ok_or_else(|| corrupt("truncated"))?;
        let json = body.get(..hlen).ok_or_else(|| corrupt("truncated header"))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let mut data = &body[hlen..];
        let expected: usize = header.sections.iter().sum::<usize>() * 8;
        if data.len() != expected {
            return Err(corrupt(&format!("{} weight bytes, expected {expected}", data.len())));
        }
        let mut arrays = Vec::with_capacity(header.sections.len());
        for &n in &header.sections {
            let (chunk, rest) = data.split_at(8 * n);
            arrays.push(chunk.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect::<Vec<f64>>());
            data = rest;
        }
        let arch = header.arch;
        let pshape = MlpShape::new(arch.obs_dim, &arch.hidden, arch.head.outputs());
        let vshape = MlpShape::new(arch.obs_dim, &arch.hidden, 1);
        let want_std = if matches!(arch.head, crate::policy::Head::Gaussian { .. }) { arch.head.outputs() } else { 0 };
        let want_adam = if header.adam.is_some() { 9 } else { 3 };
        if arrays.len() != want_adam
            || arrays[0].len() != pshape.param_count()
            || arrays[1].len() != vshape.param_count()
            || arrays[2].len() != want_std
        {
            return Err(corrupt("weight sections do not match the architecture"));
        }
        let mut it = arrays.into_iter();
        let net = ActorCritic {
            arch,
            policy: Mlp { shape: pshape, params: it.next().unwrap() },
            value: Mlp { shape: vshape, params: it.next().unwrap() },
            log_std: it.next().unwrap(),
        };
        let adam = header.adam.map(|h| {
            let rest: Vec<Vec<f64>> = it.collect();
            let (m, v) = rest.split_at(3);
            Adam { lr: h.lr, beta1: h.beta1, beta2: h.beta2, eps: h.eps, t: h.t, m: m.to_vec(), v: v.to_vec() }
        });
        Ok(Checkpoint { net, state: header.state, adam })
    }

    /// Writes atomically through a temporary sibling file.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let tmp = path.with_extension("tmp");
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&self.to_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Fails unless the checkpoint matches the requested task and action space.
    pub fn expect(&self, task: TaskKind, kind: ActionSpaceKind) -> Result<(), CheckpointError> {
        if self.state.task != task || self.state.action_space != kind {
            return Err(CheckpointError::Mismatch {
                expected: format!("{}/{}", task.name(), kind),
                got: format!("{}/{}", self.state.task.name(), self.state.action_space),
            });
        }
        Ok(())
    }
}
