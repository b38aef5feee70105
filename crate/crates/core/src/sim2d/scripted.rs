//! Hand-written controller sequences for the canonical layouts.

use super::catalog::{null_index, wall_slot, Slot};
use super::config::TaskKind;
use super::env::Env;
use crate::composer::Selection;

/// Press down toward the ledges with the force controller, slide toward the
/// goal wall along the nullspace, and square up against the right slot wall.
pub fn scripted_fit(env: &Env) -> Selection {
    let task = TaskKind::BlockFit;
    let goal = env.config().goal_wall;
    Selection::new([
        wall_slot(task, 0, Slot::Force),
        wall_slot(task, goal, Slot::ErrorAttractor),
        wall_slot(task, goal + 1, Slot::RotateX),
    ])
}

/// Walls: 0 floor, 1 vertical wall, 2 ledge, 3 back wall.
pub fn scripted_push(env: &Env) -> Selection {
    let task = TaskKind::BlockPush;
    let null = null_index(task, env.config().walls.len());
    let robot = env.robot();
    let target = env.target().expect("block push has a target block");
    let corner = env.config().walls()[1].corner;
    let (hr, ht) = (robot.half_width, target.half_width);
    let level = wall_slot(task, 1, Slot::RotateX);
    let s = |a: usize, b: usize| Selection::new([a, b, level]);
    let gap = (target.position.x - ht) - (robot.position.x + hr);
    let target_at_wall = (target.position.x > corner.x - ht - 0.03 && gap < 0.01) || target.position.y > corner.y;
    let target_bottom = target.position.y - ht;
    let robot_bottom = robot.position.y - hr;
    let on_target =
        (robot.position.x - target.position.x).abs() < hr + ht && robot_bottom > target.position.y + ht - 0.02;
    if robot.position.x < corner.x && robot.position.y < corner.y - 0.03 {
        if !target_at_wall && robot_bottom > 0.03 && robot.position.x < target.position.x {
            // Settle onto the floor so the push meets the target.
            s(wall_slot(task, 0, Slot::Force), null)
        } else if !target_at_wall {
            // Slide the target along the floor into the vertical wall.
            s(wall_slot(task, 0, Slot::Force), wall_slot(task, 1, Slot::Force))
        } else {
            // Squeeze it against the wall and rise to ledge height.
            s(wall_slot(task, 1, Slot::NormalAttractor), wall_slot(task, 2, Slot::NormalAttractor))
        }
    } else if target.position.x < corner.x && target_bottom < corner.y + 0.02 {
        // Keep squeezing and climb toward the top of the back wall.
        s(wall_slot(task, 1, Slot::Curl), wall_slot(task, 1, Slot::NormalAttractor))
    } else if target.position.x > corner.x + 0.5 && target_bottom > corner.y + 0.03 && robot_bottom < corner.y + 0.03 {
        // Wedged against the back wall above the ledge: back off so it drops.
        s(wall_slot(task, 1, Slot::NormalAttractor), wall_slot(task, 2, Slot::Force))
    } else if robot_bottom > corner.y + 0.03 && !(on_target && target.position.x < corner.x + 0.3) {
        // Drop onto the ledge behind the target.
        s(wall_slot(task, 1, Slot::NormalAttractor), wall_slot(task, 2, Slot::Force))
    } else {
        // Press on the ledge and push into the back wall.
        s(wall_slot(task, 2, Slot::Force), wall_slot(task, 2, Slot::SideAttractor))
    }
}
