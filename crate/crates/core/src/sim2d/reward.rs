//! Potential-based progress rewards.

/// Distance-like quantities the rewards are built from.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct Potentials {
    /// Block Fit: robot to goal. Block Push: target block to goal.
    pub distance: f64,
    /// Absolute angle to the goal orientation (rad); Block Fit only.
    pub angle: f64,
    /// Robot to target block; Block Push only.
    pub approach: f64,
}

pub const ALIVE_PENALTY: f64 = 0.1;
pub const FIT_BONUS: f64 = 1000.0;
pub const PUSH_BONUS: f64 = 200.0;

pub fn fit_success(cur: &Potentials, distance_tol: f64, angle_tol: f64) -> bool {
    cur.distance < distance_tol && cur.angle < angle_tol
}

pub fn push_success(cur: &Potentials, distance_tol: f64) -> bool {
    cur.distance < distance_tol
}

/// `10 (phi_d - phi'_d) + 5 (phi_th - phi'_th) - 0.1 + 1000 [success]`;
/// progress is rewarded, so each term is previous minus current.
pub fn reward_block_fit(prev: &Potentials, cur: &Potentials, distance_tol: f64, angle_tol: f64) -> f64 {
    let bonus = if fit_success(cur, distance_tol, angle_tol) { FIT_BONUS } else { 0.0 };
    10.0 * (prev.distance - cur.distance) + 5.0 * (prev.angle - cur.angle) - ALIVE_PENALTY + bonus
}

pub fn reward_block_push(prev: &Potentials, cur: &Potentials, distance_tol: f64) -> f64 {
    let bonus = if push_success(cur, distance_tol) { PUSH_BONUS } else { 0.0 };
    10.0 * (prev.distance - cur.distance) + 10.0 * (prev.approach - cur.approach) - ALIVE_PENALTY + bonus
}
