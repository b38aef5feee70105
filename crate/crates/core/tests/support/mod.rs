//! Random generators and independent oracles shared by integration tests.
#![allow(dead_code)]

use axcomp_core::composer::{compose_rotational, integrate_orientation, Selection};
use axcomp_core::controllers::{BodyState, ControllerKind, ControllerSpec, PointTarget};
use axcomp_core::geom::{exp_map, Mat3, Vec3};
use nalgebra::DMatrix;
use rand::Rng;

pub fn unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn vec3<R: Rng>(rng: &mut R, scale: f64) -> Vec3 {
    Vec3::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn rotation<R: Rng>(rng: &mut R) -> Mat3 {
    let axis = unit(rng);
    exp_map(&axcomp_core::geom::RotVec(axis * rng.random_range(0.0..3.0)))
}

pub fn state<R: Rng>(rng: &mut R) -> BodyState {
    BodyState {
        position: vec3(rng, 2.0),
        orientation: rotation(rng),
        linear_velocity: vec3(rng, 1.0),
        angular_velocity: vec3(rng, 1.0),
        contact_force: vec3(rng, 20.0),
    }
}

/// Position, error-direction, curl or force controller with random geometry and gains.
pub fn translational_spec<R: Rng>(rng: &mut R) -> ControllerSpec {
    let gain = rng.random_range(0.5..2.0);
    let clip = rng.random_range(0.1..3.0);
    let kind = match rng.random_range(0..4) {
        0 => {
            ControllerKind::PositionFixedAxis { target: PointTarget::Fixed { point: vec3(rng, 2.0) }, axis: unit(rng) }
        }
        1 => ControllerKind::PositionErrorAxis { target: PointTarget::Fixed { point: vec3(rng, 2.0) } },
        2 => {
            let t = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0);
            let tangent = if t.norm() > 1e-3 { t.normalize() } else { Vec3::x() };
            ControllerKind::PositionCurl { corner: vec3(rng, 2.0), tangent }
        }
        _ => ControllerKind::Force { magnitude: rng.random_range(0.0..20.0), axis: unit(rng) },
    };
    ControllerSpec { kind, gain, clip, integral_gain: 0.0, object: None }
}

pub fn rotation_spec<R: Rng>(rng: &mut R) -> ControllerSpec {
    ControllerSpec {
        kind: ControllerKind::Rotation { selector: unit(rng), target_axis: unit(rng) },
        gain: rng.random_range(0.5..2.0),
        clip: rng.random_range(0.2..3.0),
        integral_gain: 0.0,
        object: None,
    }
}

/// Error vector and axis of one controller, written out from the definitions.
fn raw_and_axis(spec: &ControllerSpec, s: &BodyState) -> (Vec3, Option<Vec3>) {
    let p = |u: &Vec3| u * u.transpose();
    match &spec.kind {
        ControllerKind::PositionFixedAxis { target: PointTarget::Fixed { point }, axis } => {
            (p(axis) * (point - s.position) * spec.gain, Some(*axis))
        }
        ControllerKind::PositionErrorAxis { target: PointTarget::Fixed { point } } => {
            let e = point - s.position;
            if e.norm() < 1e-8 {
                (Vec3::zeros(), None)
            } else {
                (e * spec.gain, Some(e / e.norm()))
            }
        }
        ControllerKind::PositionCurl { corner, tangent } => {
            let r = s.position - corner;
            let radius = r.norm();
            if radius < 1e-8 {
                return (Vec3::zeros(), None);
            }
            // Quarter turn about +z: (x, y, z) -> (-y, x, z).
            let u = Vec3::new(-r.y, r.x, r.z) / radius;
            let target = corner + tangent * radius;
            (p(&u) * (target - s.position) * spec.gain, Some(u))
        }
        ControllerKind::Force { magnitude, axis } => {
            (p(axis) * (axis * *magnitude - s.contact_force) * spec.gain, Some(*axis))
        }
        other => panic!("oracle does not cover {other:?}"),
    }
}

/// `I - U^+ U` using nalgebra's own SVD pseudoinverse.
pub fn dense_nullspace(rows: &[Vec3]) -> DMatrix<f64> {
    if rows.is_empty() {
        return DMatrix::identity(3, 3);
    }
    let u = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let pinv = u.clone().pseudo_inverse(1e-10).expect("svd converges");
    DMatrix::identity(3, 3) - pinv * u
}

fn clip(v: DMatrix<f64>, limit: f64) -> DMatrix<f64> {
    let n = v.norm();
    if n > limit {
        v * (limit / n)
    } else {
        v
    }
}

/// Dense-matrix reference for prioritized translational composition.
pub fn dense_compose(specs: &[ControllerSpec], s: &BodyState) -> Vec3 {
    let mut rows: Vec<Vec3> = Vec::new();
    let mut total = DMatrix::<f64>::zeros(3, 1);
    for spec in specs {
        let (raw, axis) = raw_and_axis(spec, s);
        let raw = DMatrix::from_column_slice(3, 1, raw.as_slice());
        total += clip(dense_nullspace(&rows) * raw, spec.clip);
        if let Some(u) = axis {
            rows.push(u);
        }
    }
    Vec3::new(total[0], total[1], total[2])
}

/// Largest pointwise deviation of the priority-0 body axis between a rollout
/// with the top controller alone and one with a lower-priority controller added.
pub fn rotation_interference(top: &ControllerSpec, low: &ControllerSpec, start: Mat3, steps: usize, dt: f64) -> f64 {
    let catalog = vec![top.clone(), low.clone()];
    let ControllerKind::Rotation { selector, .. } = top.kind else { panic!("rotation controller expected") };
    let mut alone = start;
    let mut both = start;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let step = |r: Mat3, sel: &Selection| {
            let mut s = BodyState::at(Vec3::zeros());
            s.orientation = r;
            let (_, terms) = compose_rotational(sel, &catalog, &s).expect("valid selection");
            integrate_orientation(&r, &terms, dt)
        };
        alone = step(alone, &Selection::new([0]));
        both = step(both, &Selection::new([0, 1]));
        worst = worst.max((alone * selector - both * selector).norm());
    }
    worst
}
