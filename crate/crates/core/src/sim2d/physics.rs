//! Penalty-contact integrator for one or two square blocks among static walls.

use serde::{Deserialize, Serialize};

use super::body::{perp, PlanarBody, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsParams {
    /// Control step (s); one impedance update per step.
    pub dt: f64,
    /// Contact substeps per control step.
    pub substeps: usize,
    pub stiffness: f64,
    pub damping: f64,
    pub wall_friction: f64,
    pub block_friction: f64,
    /// Fraction of the tangential contact velocity friction may cancel per
    /// substep, shared by the contacts of one body pair, before hitting the
    /// Coulomb bound.
    pub stick_gain: f64,
    /// Walls are one-sided slabs this thick.
    pub max_depth: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            dt: 0.01,
            substeps: 32,
            stiffness: 1e5,
            damping: 50.0,
            wall_friction: 0.3,
            block_friction: 0.3,
            stick_gain: 1.0,
            max_depth: 0.15,
        }
    }
}

/// Wall segment with its solid side on the right of `p0 -> p1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub p0: Vec2,
    pub p1: Vec2,
    /// Unit direction `p0 -> p1`.
    pub dir: Vec2,
    /// Unit normal pointing into the solid.
    pub normal: Vec2,
    pub length: f64,
}

impl Segment {
    pub fn new(p0: Vec2, p1: Vec2) -> Self {
        let d = p1 - p0;
        let length = d.norm();
        let dir = d / length;
        Segment { p0, p1, dir, normal: Vec2::new(dir.y, -dir.x), length }
    }

    /// Depth of `p` inside the wall slab, if any.
    pub fn depth(&self, p: &Vec2, max_depth: f64) -> Option<f64> {
        let r = p - self.p0;
        let s = r.dot(&self.normal);
        let t = r.dot(&self.dir);
        (s > 0.0 && s < max_depth && (0.0..=self.length).contains(&t)).then_some(s)
    }
}

/// A penetrating contact on a body; `normal` is the direction the contact pushes it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    pub point: Vec2,
    pub normal: Vec2,
    pub depth: f64,
}

/// Static scene: wall slabs plus the convex chain vertices that can poke into a block face.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub segments: Vec<Segment>,
    pub convex_points: Vec<Vec2>,
    /// Unit bisector pointing into the solid at each convex point.
    pub convex_inward: Vec<Vec2>,
    /// `convex_joint[i]`: segment `i` meets segment `i + 1` at a convex vertex.
    pub convex_joint: Vec<bool>,
}

impl Scene {
    /// Walls given as a connected or broken chain of `(p0, p1)` pairs.
    pub fn new(walls: &[(Vec2, Vec2)]) -> Self {
        let segments: Vec<Segment> = walls.iter().map(|(a, b)| Segment::new(*a, *b)).collect();
        let mut convex_points = Vec::new();
        let mut convex_inward = Vec::new();
        let mut convex_joint = vec![false; segments.len()];
        for (i, s) in segments.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| &segments[j]).filter(|p| (p.p1 - s.p0).norm() < 1e-9);
            // A joint turning right exposes its vertex; free ends always do.
            match prev {
                Some(p) if super::body::cross2(&p.dir, &s.dir) >= 0.0 => {}
                Some(p) => {
                    convex_joint[i - 1] = true;
                    convex_points.push(s.p0);
                    convex_inward.push((p.normal + s.normal).normalize());
                }
                None => {
                    // A free end behaves like a joint with a wall facing along the chain.
                    convex_points.push(s.p0);
                    convex_inward.push((s.normal + s.dir).normalize());
                }
            }
            let joined = segments.get(i + 1).is_some_and(|n| (n.p0 - s.p1).norm() < 1e-9);
            if !joined {
                convex_points.push(s.p1);
                convex_inward.push((s.normal - s.dir).normalize());
            }
        }
        Scene { segments, convex_points, convex_inward, convex_joint }
    }

    pub fn contacts(&self, body: &PlanarBody, max_depth: f64, out: &mut Vec<Contact>) {
        for c in body.corners() {
            let hits: Vec<(usize, f64)> =
                self.segments.iter().enumerate().filter_map(|(i, s)| s.depth(&c, max_depth).map(|d| (i, d))).collect();
            for &(i, depth) in &hits {
                // Past a convex joint the neighbouring slab overlaps this one; only
                // the shallower of the two is a real surface.
                let shadowed = hits.iter().any(|&(j, dj)| {
                    dj < depth && ((j + 1 == i && self.convex_joint[j]) || (i + 1 == j && self.convex_joint[i]))
                });
                if !shadowed {
                    out.push(Contact { point: c, normal: -self.segments[i].normal, depth });
                }
            }
        }
        // A vertex can only push the body back out of the solid.
        for (q, inward) in self.convex_points.iter().zip(&self.convex_inward) {
            if let Some((depth, n)) = body.penetration_toward(q, inward) {
                out.push(Contact { point: *q, normal: -n, depth });
            }
        }
    }
}

fn support(b: &PlanarBody, n: &Vec2) -> f64 {
    let (ex, ey) = b.axes();
    b.half_width * (n.dot(&ex).abs() + n.dot(&ey).abs())
}

/// Contacts on `a` from overlapping block `b`. The normal is the separating
/// axis of least overlap, so a corner poking near another corner of the
/// smaller block cannot flip the push direction; contact points are the
/// corners of either block lying inside the other.
pub fn block_contacts(a: &PlanarBody, b: &PlanarBody, out: &mut Vec<Contact>) {
    let (ax, ay) = a.axes();
    let (bx, by) = b.axes();
    let d = a.position - b.position;
    let mut best: Option<(f64, Vec2)> = None;
    for k in [bx, by, ax, ay] {
        let overlap = support(a, &k) + support(b, &k) - d.dot(&k).abs();
        if overlap <= 0.0 {
            return;
        }
        // Ties keep the earlier axis.
        if best.is_none_or(|(o, _)| overlap < o - 1e-12) {
            let n = if d.dot(&k) >= 0.0 { k } else { -k };
            best = Some((overlap, n));
        }
    }
    let Some((_, n)) = best else { return };
    let (sa, sb) = (support(a, &n), support(b, &n));
    for c in a.corners() {
        if b.penetration(&c).is_some() {
            let depth = sb - (c - b.position).dot(&n);
            if depth > 0.0 {
                out.push(Contact { point: c, normal: n, depth });
            }
        }
    }
    for c in b.corners() {
        if a.penetration(&c).is_some() {
            let depth = sa + (c - a.position).dot(&n);
            if depth > 0.0 {
                out.push(Contact { point: c, normal: n, depth });
            }
        }
    }
}

/// Inverse effective mass of `body` at `point` along direction `dir`.
pub fn inverse_mass_along(body: &PlanarBody, point: &Vec2, dir: &Vec2) -> f64 {
    let rt = super::body::cross2(&(point - body.position), dir);
    1.0 / body.mass + rt * rt / body.inertia
}

/// Spring-damper normal force plus Coulomb friction. `rel_velocity` is the
/// contact point velocity relative to the other side and `inv_mass_t` the
/// inverse effective mass along the contact tangent. Friction opposes sliding
/// with the force that would remove `stick_gain` of the tangential velocity
/// in one substep, capped at `mu * F_n`. Callers split the configured gain
/// across the simultaneous contacts of one body pair.
pub fn contact_force(
    c: &Contact,
    rel_velocity: &Vec2,
    friction: f64,
    inv_mass_t: f64,
    stick_gain: f64,
    h: f64,
    p: &PhysicsParams,
) -> Vec2 {
    let vn = rel_velocity.dot(&c.normal);
    let fn_ = (p.stiffness * c.depth - p.damping * vn).max(0.0);
    let t = perp(&c.normal);
    let vt = rel_velocity.dot(&t);
    let bound = friction * fn_;
    let ft = (-stick_gain * vt / (h * inv_mass_t)).clamp(-bound, bound);
    c.normal * fn_ + t * ft
}

/// Commanded wrench on the robot with its damping gains split out, so the
/// damping can be integrated implicitly.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Actuation {
    pub force: Vec2,
    pub torque: f64,
    pub linear_damping: f64,
    pub angular_damping: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Force the robot exerts on its surroundings, averaged over substeps.
    pub robot_contact_force: Vec2,
    /// Total contact force acting on the target block, averaged over substeps.
    pub target_contact_force: Vec2,
    pub contacts: usize,
}

fn integrate(body: &mut PlanarBody, force: &Vec2, torque: f64, lin_damp: f64, ang_damp: f64, h: f64) {
    body.velocity = (body.velocity + force * (h / body.mass)) / (1.0 + h * lin_damp / body.mass);
    body.omega = (body.omega + torque * (h / body.inertia)) / (1.0 + h * ang_damp / body.inertia);
    body.position += body.velocity * h;
    body.angle += body.omega * h;
}

fn torque_about(body: &PlanarBody, point: &Vec2, force: &Vec2) -> f64 {
    super::body::cross2(&(point - body.position), force)
}

/// Advances the bodies by one control step `params.dt`.
pub fn step(
    scene: &Scene,
    params: &PhysicsParams,
    gravity: &Vec2,
    robot: &mut PlanarBody,
    mut target: Option<&mut PlanarBody>,
    drive: &Actuation,
) -> StepReport {
    let h = params.dt / params.substeps as f64;
    let mut report = StepReport::default();
    let mut contacts = Vec::with_capacity(16);
    for _ in 0..params.substeps {
        let mut f_r = Vec2::zeros();
        let mut t_r = 0.0;
        let mut f_t = Vec2::zeros();
        let mut t_t = 0.0;

        contacts.clear();
        scene.contacts(robot, params.max_depth, &mut contacts);
        report.contacts += contacts.len();
        let gain = params.stick_gain / contacts.len().max(1) as f64;
        for c in &contacts {
            let im = inverse_mass_along(robot, &c.point, &perp(&c.normal));
            let f = contact_force(c, &robot.point_velocity(&c.point), params.wall_friction, im, gain, h, params);
            f_r += f;
            t_r += torque_about(robot, &c.point, &f);
        }

        if let Some(tb) = target.as_deref_mut() {
            contacts.clear();
            scene.contacts(tb, params.max_depth, &mut contacts);
            report.contacts += contacts.len();
            let gain = params.stick_gain / contacts.len().max(1) as f64;
            for c in &contacts {
                let im = inverse_mass_along(tb, &c.point, &perp(&c.normal));
                let f = contact_force(c, &tb.point_velocity(&c.point), params.wall_friction, im, gain, h, params);
                f_t += f;
                t_t += torque_about(tb, &c.point, &f);
            }
            contacts.clear();
            block_contacts(robot, tb, &mut contacts);
            report.contacts += contacts.len();
            let gain = params.stick_gain / contacts.len().max(1) as f64;
            for c in &contacts {
                let rel = robot.point_velocity(&c.point) - tb.point_velocity(&c.point);
                let t = perp(&c.normal);
                let im = inverse_mass_along(robot, &c.point, &t) + inverse_mass_along(tb, &c.point, &t);
                let f = contact_force(c, &rel, params.block_friction, im, gain, h, params);
                f_r += f;
                t_r += torque_about(robot, &c.point, &f);
                f_t -= f;
                t_t -= torque_about(tb, &c.point, &f);
            }
            report.target_contact_force += f_t;
            let weight = gravity * tb.mass;
            integrate(tb, &(f_t + weight), t_t, 0.0, 0.0, h);
        }

        report.robot_contact_force -= f_r;
        let total = drive.force + f_r + gravity * robot.mass;
        integrate(robot, &total, drive.torque + t_r, drive.linear_damping, drive.angular_damping, h);
    }
    let n = params.substeps as f64;
    report.robot_contact_force /= n;
    report.target_contact_force /= n;
    report
}

/// Elastic energy stored in the penalty springs of the current overlaps.
pub fn penalty_energy(scene: &Scene, params: &PhysicsParams, robot: &PlanarBody, target: Option<&PlanarBody>) -> f64 {
    let mut contacts = Vec::new();
    scene.contacts(robot, params.max_depth, &mut contacts);
    if let Some(tb) = target {
        scene.contacts(tb, params.max_depth, &mut contacts);
        block_contacts(robot, tb, &mut contacts);
    }
    contacts.iter().map(|c| 0.5 * params.stiffness * c.depth * c.depth).sum()
}
