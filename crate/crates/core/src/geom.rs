//! Projection, nullspace and rotation algebra shared by every controller.
//!
//! Vectors and matrices are `nalgebra` fixed-size types. Rotations are carried
//! either as rotation matrices or as angle-axis vectors ([`RotVec`]), the
//! latter being the currency of the rotation controllers and the composer.

use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on the norm of axes handed to the projection operators.
pub const UNIT_TOL: f64 = 1e-9;

/// Singular values at or below this are treated as zero by [`pinv`].
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("projection axis must be unit length, got norm {0}")]
    NonUnitAxis(f64),
    #[error("nullspace accepts at most 3 rows, got {0}")]
    TooManyRows(usize),
}

/// Angle-axis rotation vector: direction is the axis, norm is the angle in radians.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct RotVec(pub Vec3);

impl RotVec {
    pub fn zero() -> Self {
        RotVec(Vec3::zeros())
    }

    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        RotVec(self.0 * s)
    }
}

pub fn is_unit(u: &Vec3) -> bool {
    (u.norm() - 1.0).abs() <= UNIT_TOL
}

/// Returns `v / |v|`, or `None` when the norm is below `eps`.
pub fn normalize(v: &Vec3, eps: f64) -> Option<Vec3> {
    let n = v.norm();
    (n > eps).then(|| v / n)
}

/// Projection of `v` onto the line spanned by the unit axis `u`: `(u u^T) v`.
pub fn project(u: &Vec3, v: &Vec3) -> Result<Vec3, GeomError> {
    if !is_unit(u) {
        return Err(GeomError::NonUnitAxis(u.norm()));
    }
    Ok(u * u.dot(v))
}

/// Moore-Penrose pseudoinverse through the singular value decomposition.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    m.clone().pseudo_inverse(PINV_CUTOFF).expect("cutoff is non-negative")
}

/// `N(U) = I - U^+ U` for the matrix whose rows are `rows`.
///
/// Rows beyond the rank of the stack (duplicates, zero rows) are absorbed by
/// the pseudoinverse, so the result is always a symmetric idempotent projector.
pub fn nullspace(rows: &[Vec3]) -> Result<Mat3, GeomError> {
    if rows.len() > 3 {
        return Err(GeomError::TooManyRows(rows.len()));
    }
    if rows.is_empty() {
        return Ok(Mat3::identity());
    }
    // Zero-padding to 3x3 leaves U^+ U unchanged and keeps the SVD fixed-size.
    let mut stacked = Mat3::zeros();
    for (i, r) in rows.iter().enumerate() {
        stacked.set_row(i, &r.transpose());
    }
    let u_pinv = stacked.pseudo_inverse(PINV_CUTOFF).expect("cutoff is non-negative");
    Ok(Mat3::identity() - u_pinv * stacked)
}

/// A unit vector orthogonal to the unit vector `a`, built by swapping two
/// components, negating one and zeroing the third.
pub fn orthogonal_unit(a: &Vec3) -> Vec3 {
    let candidate = if a.x * a.x + a.y * a.y > 1e-6 { Vec3::new(-a.y, a.x, 0.0) } else { Vec3::new(0.0, -a.z, a.y) };
    candidate.normalize()
}

/// Angle-axis rotation carrying unit vector `a` onto unit vector `b`.
///
/// The magnitude is exactly the angle between the two vectors. Aligned inputs
/// give the zero vector; antipodal inputs rotate by pi about
/// [`orthogonal_unit`]`(a)`.
pub fn angle_axis_error(a: &Vec3, b: &Vec3) -> RotVec {
    let cos = a.dot(b).clamp(-1.0, 1.0);
    let cross = a.cross(b);
    let sin = cross.norm();
    if sin < 1e-12 {
        if cos > 0.0 {
            return RotVec::zero();
        }
        return RotVec(orthogonal_unit(a) * std::f64::consts::PI);
    }
    // atan2 keeps full precision near 0 and pi where acos does not.
    let theta = sin.atan2(cos);
    RotVec(cross * (theta / sin))
}

pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Rodrigues' formula.
pub fn exp_map(r: &RotVec) -> Mat3 {
    let theta = r.0.norm();
    let k = skew(&r.0);
    let (a, b) = if theta < 1e-6 {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Mat3::identity() + k * a + k * k * b
}

/// Inverse of [`exp_map`], returning an angle in `[0, pi]`.
pub fn log_map(m: &Mat3) -> RotVec {
    let cos = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let skew_part = vee(&(m - m.transpose())) * 0.5; // sin(theta) * n
    let sin = skew_part.norm();
    let theta = sin.atan2(cos);
    if theta < 1e-6 {
        // theta / sin(theta) ~ 1 + theta^2 / 6
        return RotVec(skew_part * (1.0 + theta * theta / 6.0));
    }
    if theta < 3.0 {
        return RotVec(skew_part * (theta / sin));
    }
    // Near pi the antisymmetric part vanishes; read the axis off n n^T.
    let sym = (m + m.transpose()) * 0.5;
    let nnt = (sym - Mat3::identity() * cos) / (1.0 - cos);
    let mut best = 0;
    for i in 1..3 {
        if nnt[(i, i)] > nnt[(best, best)] {
            best = i;
        }
    }
    let mut axis = nnt.column(best).into_owned();
    axis /= axis.norm();
    if axis.dot(&skew_part) < 0.0 {
        axis = -axis;
    }
    RotVec(axis * theta)
}

/// `log(exp(rb) * exp(ra))`: `ra` applied first, then `rb`, both in the world frame.
pub fn compose(rb: &RotVec, ra: &RotVec) -> RotVec {
    log_map(&(exp_map(rb) * exp_map(ra)))
}

/// Rotation about the world z axis.
pub fn rot_z(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
