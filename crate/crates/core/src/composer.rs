//! Hierarchical composition of selected controllers into one delta-pose target,
//! and the task-space impedance law that turns it into a wrench.
//!
//! Translational controllers (position and force) are stacked in priority
//! order; controller `i` is projected onto the nullspace of the axes of all
//! higher-priority controllers, clipped, and summed. Rotation controllers are
//! composed the same way in the rotation group: the priority-1 controller only
//! sees the components of its current and target axes orthogonal to the
//! priority-0 body axis.

use thiserror::Error;

use crate::controllers::{
    clip_magnitude, effective_axis, force_error, position_error, rotation_error, BodyState, ControllerSpec,
    ForceIntegralState, TargetRefs,
};
use crate::geom::{angle_axis_error, compose, exp_map, normalize, nullspace, Mat3, RotVec, Vec3};

pub const MAX_TRANSLATIONAL: usize = 3;
pub const MAX_ROTATIONAL: usize = 2;

/// Below this norm a projected rotation axis is treated as annihilated.
const PROJECTED_EPS: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComposeError {
    #[error("controller index {index} out of range for a catalog of {len}")]
    OutOfRange { index: usize, len: usize },
    #[error("controller {0} selected more than once")]
    Duplicate(usize),
    #[error("{0} translational controllers selected, at most 3 allowed")]
    TooManyTranslational(usize),
    #[error("{0} rotation controllers selected, at most 2 allowed")]
    TooManyRotational(usize),
}

/// Ordered controller indices; position in the list is the priority (0 highest).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Selection(pub Vec<usize>);

impl Selection {
    pub fn new(indices: impl Into<Vec<usize>>) -> Self {
        Selection(indices.into())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn validate(&self, catalog: &[ControllerSpec]) -> Result<(), ComposeError> {
        let mut seen = vec![false; catalog.len()];
        let (mut trans, mut rot) = (0, 0);
        for &i in &self.0 {
            let spec = catalog.get(i).ok_or(ComposeError::OutOfRange { index: i, len: catalog.len() })?;
            if spec.is_null() {
                continue;
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(ComposeError::Duplicate(i));
            }
            if spec.is_rotation() {
                rot += 1;
            } else {
                trans += 1;
            }
        }
        if trans > MAX_TRANSLATIONAL {
            return Err(ComposeError::TooManyTranslational(trans));
        }
        if rot > MAX_ROTATIONAL {
            return Err(ComposeError::TooManyRotational(rot));
        }
        Ok(())
    }
}

/// One priority level's contribution to the translational target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TranslationalTerm {
    pub controller: usize,
    /// Effective axis at the current state, `None` when undefined.
    pub axis: Option<Vec3>,
    /// Projected and clipped contribution `Delta_x^i`.
    pub delta: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationalTerm {
    pub controller: usize,
    pub delta: RotVec,
}

/// Composed 6D delta target plus its per-priority parts.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CommandTarget {
    pub translation: Vec3,
    pub rotation: RotVec,
    pub translational_terms: Vec<TranslationalTerm>,
    pub rotational_terms: Vec<RotationalTerm>,
}

impl CommandTarget {
    pub fn from_delta(translation: Vec3, rotation: RotVec) -> Self {
        CommandTarget { translation, rotation, ..Default::default() }
    }
}

/// Sum of nullspace-projected, clipped translational contributions.
pub fn compose_translational(
    sel: &Selection,
    catalog: &[ControllerSpec],
    state: &BodyState,
    refs: &TargetRefs,
    integrals: &mut ForceIntegralState,
) -> Result<(Vec3, Vec<TranslationalTerm>), ComposeError> {
    sel.validate(catalog)?;
    let mut axes: Vec<Vec3> = Vec::with_capacity(MAX_TRANSLATIONAL);
    let mut terms = Vec::with_capacity(MAX_TRANSLATIONAL);
    let mut total = Vec3::zeros();
    for (priority, &idx) in sel.0.iter().filter(|&&i| catalog[i].is_translational()).enumerate() {
        let spec = &catalog[idx];
        let raw = if spec.is_force() {
            force_error(spec, state, &mut integrals.accumulated[priority])
        } else {
            position_error(spec, state, refs) * spec.gain
        };
        let projected = nullspace(&axes).expect("at most two higher-priority axes") * raw;
        let delta = clip_magnitude(&projected, spec.clip);
        let axis = effective_axis(spec, state, refs);
        if let Some(u) = axis {
            axes.push(u);
        }
        total += delta;
        terms.push(TranslationalTerm { controller: idx, axis, delta });
    }
    Ok((total, terms))
}

/// Composed rotation target and its two priority contributions.
///
/// The lower-priority increment rotates about the current priority-0 body
/// axis, so it is applied first: `exp(total) = exp(Delta_R^0) exp(Delta_R^1)`.
/// Applying it second would swing the freshly rotated priority-0 axis.
pub fn compose_rotational(
    sel: &Selection,
    catalog: &[ControllerSpec],
    state: &BodyState,
) -> Result<(RotVec, Vec<RotationalTerm>), ComposeError> {
    sel.validate(catalog)?;
    let rot: Vec<usize> = sel.0.iter().copied().filter(|&i| catalog[i].is_rotation()).collect();
    let mut terms = Vec::with_capacity(2);
    let Some(&first) = rot.first() else {
        return Ok((RotVec::zero(), terms));
    };
    let top = &catalog[first];
    let top_delta = rotation_error(top, state);
    let top_delta = RotVec(clip_magnitude(&top_delta.0, top.clip));
    terms.push(RotationalTerm { controller: first, delta: top_delta });

    let Some(&second) = rot.get(1) else {
        return Ok((top_delta, terms));
    };
    let low = &catalog[second];
    let low_delta = match (&top.kind, &low.kind) {
        (
            crate::controllers::ControllerKind::Rotation { selector: top_sel, .. },
            crate::controllers::ControllerKind::Rotation { selector, target_axis },
        ) => {
            let fixed_axis = state.orientation * top_sel;
            let n = nullspace(&[fixed_axis]).expect("one row");
            let current = normalize(&(n * (state.orientation * selector)), PROJECTED_EPS);
            let target = normalize(&(n * target_axis), PROJECTED_EPS);
            match (current, target) {
                (Some(a), Some(b)) => {
                    let d = angle_axis_error(&a, &b).scaled(low.gain);
                    RotVec(clip_magnitude(&d.0, low.clip))
                }
                _ => RotVec::zero(),
            }
        }
        _ => unreachable!("filtered to rotation controllers"),
    };
    terms.push(RotationalTerm { controller: second, delta: low_delta });
    Ok((compose(&top_delta, &low_delta), terms))
}

/// Full composition of a selection.
pub fn compose_selection(
    sel: &Selection,
    catalog: &[ControllerSpec],
    state: &BodyState,
    refs: &TargetRefs,
    integrals: &mut ForceIntegralState,
) -> Result<CommandTarget, ComposeError> {
    let (translation, translational_terms) = compose_translational(sel, catalog, state, refs, integrals)?;
    let (rotation, rotational_terms) = compose_rotational(sel, catalog, state)?;
    Ok(CommandTarget { translation, rotation, translational_terms, rotational_terms })
}

/// Kinematic orientation update for a composed rotation command: each
/// priority's increment is scaled by `dt` and applied lowest priority first.
pub fn integrate_orientation(orientation: &Mat3, terms: &[RotationalTerm], dt: f64) -> Mat3 {
    terms.iter().rev().fold(*orientation, |r, t| exp_map(&t.delta.scaled(dt)) * r)
}

/// Diagonal task-space impedance gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImpedanceParams {
    pub stiffness: [f64; 6],
    pub damping: [f64; 6],
    /// Physics steps a selection runs before the policy is queried again.
    pub steps_per_selection: usize,
}

impl ImpedanceParams {
    /// Simulation values: K_S = 1000, K_D = 2 sqrt(1000), T = 10.
    pub fn simulation() -> Self {
        ImpedanceParams::uniform(1000.0, 2.0 * 1000f64.sqrt(), 10)
    }

    pub fn uniform(stiffness: f64, damping: f64, steps_per_selection: usize) -> Self {
        ImpedanceParams { stiffness: [stiffness; 6], damping: [damping; 6], steps_per_selection }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn to_array(&self) -> [f64; 6] {
        [self.force.x, self.force.y, self.force.z, self.torque.x, self.torque.y, self.torque.z]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Wrench { force: Vec3::new(a[0], a[1], a[2]), torque: Vec3::new(a[3], a[4], a[5]) }
    }
}

/// The impedance law split into a state-independent part and damping gains,
/// so an integrator can treat `-K_D * twist` implicitly.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Drive {
    /// `K_S * Delta` plus gravity compensation.
    pub wrench: Wrench,
    pub damping: [f64; 6],
}

impl Drive {
    pub fn passive(wrench: Wrench) -> Self {
        Drive { wrench, damping: [0.0; 6] }
    }
}

pub fn impedance_drive(cmd: &CommandTarget, params: &ImpedanceParams, gravity_compensation: &Vec3) -> Drive {
    let k = &params.stiffness;
    let force = Vec3::new(k[0], k[1], k[2]).component_mul(&cmd.translation) + gravity_compensation;
    let torque = Vec3::new(k[3], k[4], k[5]).component_mul(&cmd.rotation.0);
    Drive { wrench: Wrench { force, torque }, damping: params.damping }
}

/// `K_S * Delta - K_D * twist` (+ gravity compensation); the end-effector
/// Jacobian is the identity for a free-floating body.
pub fn impedance_wrench(
    cmd: &CommandTarget,
    state: &BodyState,
    params: &ImpedanceParams,
    gravity_compensation: &Vec3,
) -> Wrench {
    let drive = impedance_drive(cmd, params, gravity_compensation);
    let d = &params.damping;
    Wrench {
        force: drive.wrench.force - Vec3::new(d[0], d[1], d[2]).component_mul(&state.linear_velocity),
        torque: drive.wrench.torque - Vec3::new(d[3], d[4], d[5]).component_mul(&state.angular_velocity),
    }
}
