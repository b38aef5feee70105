//! Object-axis controllers and their raw error signals.

use serde::{Deserialize, Serialize};

use crate::geom::{angle_axis_error, normalize, rot_z, Mat3, RotVec, Vec3};

/// Below this distance an error-direction axis is undefined and the controller is idle.
pub const AXIS_EPS: f64 = 1e-8;

/// Where a position controller's target point comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum PointTarget {
    Fixed {
        point: Vec3,
    },
    /// The live position of the tracked body (the target block in Block Push).
    TrackedBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ControllerKind {
    /// Attractor to `target` along a fixed unit axis.
    PositionFixedAxis {
        target: PointTarget,
        axis: Vec3,
    },
    /// Attractor to `target` along the current error direction.
    PositionErrorAxis {
        target: PointTarget,
    },
    /// Holds the position captured when the selection started, along `axis`.
    PositionHold {
        axis: Vec3,
    },
    /// Moves on a circle around `corner` toward `corner + r * tangent`.
    PositionCurl {
        corner: Vec3,
        tangent: Vec3,
    },
    /// Regulates the contact force to `magnitude * axis`.
    Force {
        magnitude: f64,
        axis: Vec3,
    },
    /// Aligns the body axis `selector` with the world axis `target_axis`.
    Rotation {
        selector: Vec3,
        target_axis: Vec3,
    },
    Null,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerSpec {
    pub kind: ControllerKind,
    /// K_x, K_f or K_R depending on the kind.
    pub gain: f64,
    /// D_x (m), D_f (m of delta target) or D_R (rad).
    pub clip: f64,
    /// K_I, only read by force controllers.
    #[serde(default)]
    pub integral_gain: f64,
    /// Index of the wall (or other scene object) the controller is attached to.
    #[serde(default)]
    pub object: Option<usize>,
}

impl ControllerSpec {
    pub fn null() -> Self {
        ControllerSpec { kind: ControllerKind::Null, gain: 0.0, clip: 1.0, integral_gain: 0.0, object: None }
    }

    pub fn is_null(&self) -> bool {
        matches!(self.kind, ControllerKind::Null)
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self.kind, ControllerKind::Rotation { .. })
    }

    /// Position and force controllers share the three translational slots.
    pub fn is_translational(&self) -> bool {
        !self.is_null() && !self.is_rotation()
    }

    pub fn is_force(&self) -> bool {
        matches!(self.kind, ControllerKind::Force { .. })
    }

    /// Checks unit axes and positive gains/clips.
    pub fn validate(&self) -> Result<(), String> {
        let unit = |v: &Vec3, what: &str| {
            if crate::geom::is_unit(v) {
                Ok(())
            } else {
                Err(format!("{what} must be unit length (norm {})", v.norm()))
            }
        };
        match &self.kind {
            ControllerKind::Null => return Ok(()),
            ControllerKind::PositionFixedAxis { axis, .. } => unit(axis, "axis")?,
            ControllerKind::PositionHold { axis } => unit(axis, "axis")?,
            ControllerKind::PositionCurl { tangent, .. } => unit(tangent, "tangent")?,
            ControllerKind::Force { axis, .. } => unit(axis, "axis")?,
            ControllerKind::Rotation { selector, target_axis } => {
                unit(selector, "selector")?;
                unit(target_axis, "target axis")?;
            }
            ControllerKind::PositionErrorAxis { .. } => {}
        }
        if !(self.gain > 0.0) || !(self.clip > 0.0) {
            return Err(format!("gain and clip must be positive (gain {}, clip {})", self.gain, self.clip));
        }
        Ok(())
    }
}

/// Pose, twist and sensed contact force of a rigid body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodyState {
    pub position: Vec3,
    pub orientation: Mat3,
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
    /// Force the body exerts on its surroundings through contacts.
    pub contact_force: Vec3,
}

impl BodyState {
    pub fn at(position: Vec3) -> Self {
        BodyState {
            position,
            orientation: Mat3::identity(),
            linear_velocity: Vec3::zeros(),
            angular_velocity: Vec3::zeros(),
            contact_force: Vec3::zeros(),
        }
    }

    pub fn planar(x: f64, y: f64, angle: f64) -> Self {
        BodyState { orientation: rot_z(angle), ..BodyState::at(Vec3::new(x, y, 0.0)) }
    }
}

/// Scene quantities some controllers read besides the controlled body.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TargetRefs {
    pub tracked: Option<Vec3>,
    /// Position captured at the start of the current selection.
    pub hold_anchor: Option<Vec3>,
}

/// Accumulated force errors, one slot per translational priority.
///
/// Reset whenever a new selection is issued.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ForceIntegralState {
    pub accumulated: [Vec3; 3],
}

impl ForceIntegralState {
    pub fn reset(&mut self) {
        *self = Self::default();
    }
}

fn resolve(target: &PointTarget, refs: &TargetRefs) -> Option<Vec3> {
    match target {
        PointTarget::Fixed { point } => Some(*point),
        PointTarget::TrackedBody => refs.tracked,
    }
}

/// Target point and unit axis of a curl controller; `None` at the corner itself.
pub fn curl_geometry(corner: &Vec3, tangent: &Vec3, state: &BodyState) -> Option<(Vec3, Vec3)> {
    let radial = state.position - corner;
    let radius = radial.norm();
    if radius < AXIS_EPS {
        return None;
    }
    let target = corner + tangent * radius;
    // Counter-clockwise quarter turn in the task plane.
    let axis = rot_z(std::f64::consts::FRAC_PI_2) * (radial / radius);
    Some((target, axis))
}

/// Target point and effective unit axis of a position controller, or `None`
/// when the axis is undefined (error-direction controller at its goal, curl at
/// its corner, tracked target missing).
pub fn position_geometry(spec: &ControllerSpec, state: &BodyState, refs: &TargetRefs) -> Option<(Vec3, Vec3)> {
    match &spec.kind {
        ControllerKind::PositionFixedAxis { target, axis } => Some((resolve(target, refs)?, *axis)),
        ControllerKind::PositionErrorAxis { target } => {
            let goal = resolve(target, refs)?;
            let axis = normalize(&(goal - state.position), AXIS_EPS)?;
            Some((goal, axis))
        }
        ControllerKind::PositionHold { axis } => Some((refs.hold_anchor.unwrap_or(state.position), *axis)),
        ControllerKind::PositionCurl { corner, tangent } => curl_geometry(corner, tangent, state),
        _ => None,
    }
}

/// Effective axis used for nullspace stacking.
pub fn effective_axis(spec: &ControllerSpec, state: &BodyState, refs: &TargetRefs) -> Option<Vec3> {
    match &spec.kind {
        ControllerKind::Force { axis, .. } => Some(*axis),
        _ => position_geometry(spec, state, refs).map(|(_, u)| u),
    }
}

/// `P(u) (x_d - x_c)`, the unscaled translation error of a position controller.
pub fn position_error(spec: &ControllerSpec, state: &BodyState, refs: &TargetRefs) -> Vec3 {
    match position_geometry(spec, state, refs) {
        Some((target, axis)) => axis * axis.dot(&(target - state.position)),
        None => Vec3::zeros(),
    }
}

/// `K_f P(u)(f_d u - f_c) + K_I acc`, then `acc += P(u)(f_d u - f_c)`.
pub fn force_error(spec: &ControllerSpec, state: &BodyState, accumulated: &mut Vec3) -> Vec3 {
    let ControllerKind::Force { magnitude, axis } = &spec.kind else {
        return Vec3::zeros();
    };
    let err = axis * axis.dot(&(axis * *magnitude - state.contact_force));
    let out = err * spec.gain + *accumulated * spec.integral_gain;
    *accumulated += err;
    out
}

/// `K_R` times the angle-axis error between `R_c u` and `r_d`.
pub fn rotation_error(spec: &ControllerSpec, state: &BodyState) -> RotVec {
    let ControllerKind::Rotation { selector, target_axis } = &spec.kind else {
        return RotVec::zero();
    };
    let current = state.orientation * selector;
    angle_axis_error(&current, target_axis).scaled(spec.gain)
}

/// Rescales `delta` so its norm does not exceed `limit`.
pub fn clip_magnitude(delta: &Vec3, limit: f64) -> Vec3 {
    let n = delta.norm();
    if n <= limit || n == 0.0 {
        *delta
    } else {
        delta * (limit / n)
    }
}
