use nalgebra::Vector2;

use crate::controllers::BodyState;
use crate::geom::{rot_z, Vec3};

pub type Vec2 = Vector2<f64>;

/// Perpendicular `(-v.y, v.x)`, i.e. `z x v`.
pub fn perp(v: &Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

pub fn cross2(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

pub fn lift(v: &Vec2) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

pub fn flat(v: &Vec3) -> Vec2 {
    Vec2::new(v.x, v.y)
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// A square rigid block moving in the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanarBody {
    pub position: Vec2,
    pub angle: f64,
    pub velocity: Vec2,
    pub omega: f64,
    pub mass: f64,
    pub inertia: f64,
    pub half_width: f64,
}

impl PlanarBody {
    /// Uniform square plate of side `width`.
    pub fn square(width: f64, mass: f64, position: Vec2, angle: f64) -> Self {
        PlanarBody {
            position,
            angle,
            velocity: Vec2::zeros(),
            omega: 0.0,
            mass,
            inertia: mass * width * width / 6.0,
            half_width: 0.5 * width,
        }
    }

    pub fn axes(&self) -> (Vec2, Vec2) {
        let (s, c) = self.angle.sin_cos();
        (Vec2::new(c, s), Vec2::new(-s, c))
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let (ex, ey) = self.axes();
        let h = self.half_width;
        [
            self.position + (ex + ey) * h,
            self.position + (-ex + ey) * h,
            self.position + (-ex - ey) * h,
            self.position + (ex - ey) * h,
        ]
    }

    pub fn point_velocity(&self, p: &Vec2) -> Vec2 {
        self.velocity + perp(&(p - self.position)) * self.omega
    }

    /// Coordinates of a world point in the body frame.
    pub fn to_local(&self, p: &Vec2) -> Vec2 {
        let (ex, ey) = self.axes();
        let d = p - self.position;
        Vec2::new(d.dot(&ex), d.dot(&ey))
    }

    /// Penetration of `p` into the block: depth and outward face normal of the
    /// nearest face, or `None` if the point is outside.
    pub fn penetration(&self, p: &Vec2) -> Option<(f64, Vec2)> {
        let l = self.to_local(p);
        let h = self.half_width;
        let dx = h - l.x.abs();
        let dy = h - l.y.abs();
        if dx <= 0.0 || dy <= 0.0 {
            return None;
        }
        let (ex, ey) = self.axes();
        if dx < dy {
            Some((dx, ex * l.x.signum()))
        } else {
            Some((dy, ey * l.y.signum()))
        }
    }

    /// Like [`penetration`](Self::penetration), but only faces whose outward
    /// normal has a positive component along `toward` are candidates.
    pub fn penetration_toward(&self, p: &Vec2, toward: &Vec2) -> Option<(f64, Vec2)> {
        let l = self.to_local(p);
        let h = self.half_width;
        if l.x.abs() >= h || l.y.abs() >= h {
            return None;
        }
        let (ex, ey) = self.axes();
        [(h - l.x, ex), (h + l.x, -ex), (h - l.y, ey), (h + l.y, -ey)]
            .into_iter()
            .filter(|(_, n)| n.dot(toward) > 1e-9)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .or_else(|| self.penetration(p))
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.mass * self.velocity.norm_squared() + 0.5 * self.inertia * self.omega * self.omega
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.angle.is_finite()
            && self.omega.is_finite()
    }

    pub fn body_state(&self, contact_force: &Vec2) -> BodyState {
        BodyState {
            position: lift(&self.position),
            orientation: rot_z(self.angle),
            linear_velocity: lift(&self.velocity),
            angular_velocity: Vec3::new(0.0, 0.0, self.omega),
            contact_force: lift(contact_force),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn square_inertia_and_corners() {
        let b = PlanarBody::square(0.32, 1.0, Vec2::new(1.0, 2.0), 0.0);
        assert_relative_eq!(b.inertia, 0.32 * 0.32 / 6.0);
        assert_relative_eq!(b.corners()[0], Vec2::new(1.16, 2.16), epsilon = 1e-12);
        assert_relative_eq!(b.corners()[2], Vec2::new(0.84, 1.84), epsilon = 1e-12);
    }

    #[test]
    fn penetration_picks_nearest_face() {
        let b = PlanarBody::square(1.0, 1.0, Vec2::zeros(), 0.0);
        let (d, n) = b.penetration(&Vec2::new(0.45, 0.1)).unwrap();
        assert_relative_eq!(d, 0.05, epsilon = 1e-12);
        assert_relative_eq!(n, Vec2::new(1.0, 0.0));
        assert!(b.penetration(&Vec2::new(0.6, 0.0)).is_none());
    }

    #[test]
    fn wrap() {
        assert_relative_eq!(wrap_angle(3.0 * std::f64::consts::PI), std::f64::consts::PI, epsilon = 1e-12);
        assert_relative_eq!(wrap_angle(-0.5), -0.5);
    }
}
