//! Wall-attached controller catalogs.

use super::config::{EnvConfig, TaskKind, Wall};
use crate::controllers::{ControllerKind, ControllerSpec, PointTarget};
use crate::geom::Vec3;

pub const FORCE_TARGET: f64 = 10.0;

/// Gains and clips shared by every controller of a task.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CatalogGains {
    pub position_clip: f64,
    pub force_clip: f64,
    pub rotation_clip: f64,
    pub position_gain: f64,
    pub force_gain: f64,
    pub rotation_gain: f64,
    pub integral_gain: f64,
}

impl CatalogGains {
    pub fn for_task(task: TaskKind) -> Self {
        let (dx, df, dr) = match task {
            TaskKind::BlockFit => (1.0, 0.5, 90f64.to_radians()),
            TaskKind::BlockPush => (0.5, 0.1, 120f64.to_radians()),
        };
        CatalogGains {
            position_clip: dx,
            force_clip: df,
            rotation_clip: dr,
            position_gain: 1.0,
            force_gain: 1.0,
            rotation_gain: 1.0,
            integral_gain: 0.0,
        }
    }
}

/// Controllers per wall, in catalog order.
pub fn per_wall(task: TaskKind) -> usize {
    match task {
        TaskKind::BlockFit => 5,
        TaskKind::BlockPush => 7,
    }
}

/// Size of the catalog for `walls` walls, null included.
pub fn catalog_len(task: TaskKind, walls: usize) -> usize {
    walls * per_wall(task) + usize::from(task == TaskKind::BlockPush) + 1
}

fn spec(kind: ControllerKind, gain: f64, clip: f64, object: Option<usize>) -> ControllerSpec {
    ControllerSpec { kind, gain, clip, integral_gain: 0.0, object }
}

fn wall_controllers(i: usize, w: &Wall, task: TaskKind, g: &CatalogGains, out: &mut Vec<ControllerSpec>) {
    let at = |p: Vec3| PointTarget::Fixed { point: p };
    let obj = Some(i);
    out.push(spec(
        ControllerKind::PositionFixedAxis { target: at(w.center), axis: w.normal },
        g.position_gain,
        g.position_clip,
        obj,
    ));
    out.push(spec(ControllerKind::PositionErrorAxis { target: at(w.center) }, g.position_gain, g.position_clip, obj));
    let mut force =
        spec(ControllerKind::Force { magnitude: FORCE_TARGET, axis: w.normal }, g.force_gain, g.force_clip, obj);
    force.integral_gain = g.integral_gain;
    out.push(force);
    for selector in [Vec3::x(), Vec3::y()] {
        out.push(spec(
            ControllerKind::Rotation { selector, target_axis: w.normal },
            g.rotation_gain,
            g.rotation_clip,
            obj,
        ));
    }
    if task == TaskKind::BlockPush {
        out.push(spec(
            ControllerKind::PositionFixedAxis { target: at(w.corner), axis: w.tangent },
            g.position_gain,
            g.position_clip,
            obj,
        ));
        out.push(spec(
            ControllerKind::PositionCurl { corner: w.corner, tangent: w.tangent },
            g.position_gain,
            g.position_clip,
            obj,
        ));
    }
}

/// Wall index major, controller kind minor, the target-block attractor
/// (Block Push) and finally the null controller.
pub fn build_catalog(config: &EnvConfig) -> Vec<ControllerSpec> {
    let g = CatalogGains::for_task(config.task);
    let mut out = Vec::with_capacity(catalog_len(config.task, config.walls.len()));
    for (i, w) in config.walls().iter().enumerate() {
        wall_controllers(i, w, config.task, &g, &mut out);
    }
    if config.task == TaskKind::BlockPush {
        out.push(spec(
            ControllerKind::PositionErrorAxis { target: PointTarget::TrackedBody },
            g.position_gain,
            g.position_clip,
            None,
        ));
    }
    out.push(ControllerSpec::null());
    out
}

/// Named catalog slots, used by the scripted policies and in trajectory dumps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    NormalAttractor,
    ErrorAttractor,
    Force,
    RotateX,
    RotateY,
    SideAttractor,
    Curl,
}

impl Slot {
    pub fn offset(self) -> usize {
        match self {
            Slot::NormalAttractor => 0,
            Slot::ErrorAttractor => 1,
            Slot::Force => 2,
            Slot::RotateX => 3,
            Slot::RotateY => 4,
            Slot::SideAttractor => 5,
            Slot::Curl => 6,
        }
    }
}

pub fn wall_slot(task: TaskKind, wall: usize, slot: Slot) -> usize {
    assert!(slot.offset() < per_wall(task), "{slot:?} is not in the {} catalog", task.name());
    wall * per_wall(task) + slot.offset()
}

pub fn null_index(task: TaskKind, walls: usize) -> usize {
    catalog_len(task, walls) - 1
}

/// Index of the target-block attractor in a Block Push catalog.
pub fn tracked_index(walls: usize) -> usize {
    walls * per_wall(TaskKind::BlockPush)
}

/// Short human-readable label such as `w2.force`.
pub fn label(task: TaskKind, walls: usize, index: usize) -> String {
    let n = per_wall(task);
    if index < walls * n {
        let slot = match index % n {
            0 => "normal",
            1 => "error_axis",
            2 => "force",
            3 => "rot_x",
            4 => "rot_y",
            5 => "side",
            _ => "curl",
        };
        format!("w{}.{slot}", index / n)
    } else if index + 1 < catalog_len(task, walls) {
        "to_target_block".into()
    } else {
        "null".into()
    }
}
