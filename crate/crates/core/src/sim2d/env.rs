//! Block Fit / Block Push environments stepped one controller selection at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::body::{flat, lift, wrap_angle, PlanarBody, Vec2};
use super::catalog::build_catalog;
use super::config::{EnvConfig, EpisodeParams, PoseRange, TaskKind};
use super::physics::{self, Actuation, Scene};
use super::reward::{fit_success, push_success, reward_block_fit, reward_block_push, Potentials};
use crate::composer::{
    compose_selection, impedance_drive, CommandTarget, ComposeError, ImpedanceParams, RotationalTerm, Selection,
    TranslationalTerm,
};
use crate::controllers::{clip_magnitude, ControllerSpec, ForceIntegralState, TargetRefs};
use crate::geom::{RotVec, Vec3};

pub const RESET_ATTEMPTS: usize = 100;
/// Contact force magnitudes are divided by this in observations.
pub const FORCE_SCALE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid selection: {0}")]
    InvalidSelection(#[from] ComposeError),
    #[error("no collision-free start pose after {RESET_ATTEMPTS} attempts for `{0}`")]
    ResetFailed(String),
    #[error("episode is over; call reset")]
    EpisodeOver,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Success,
    Timeout,
    Fall,
    NonFinite,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Success => "success",
            Termination::Timeout => "timeout",
            Termination::Fall => "fall",
            Termination::NonFinite => "nonfinite",
        }
    }
}

/// What drives the robot for one environment step.
#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Select(Selection),
    /// End-effector delta pose `(dx, dy, dtheta)` in `[-1, 1]`, scaled by `D_x` and `D_R`.
    EndEffector([f64; 3]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub termination: Option<Termination>,
    pub potentials: Potentials,
}

/// One physics step of a rollout, for trajectory dumps.
#[derive(Clone, Debug, Serialize)]
pub struct PhysicsRecord {
    pub step: usize,
    pub robot: [f64; 3],
    pub robot_twist: [f64; 3],
    pub contact_force: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 3]>,
    pub delta_translation: Vec3,
    pub delta_rotation: Vec3,
    pub translational: Vec<PriorityRecord>,
    pub rotational: Vec<PriorityRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PriorityRecord {
    pub controller: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<Vec3>,
    pub delta: Vec3,
}

impl From<&TranslationalTerm> for PriorityRecord {
    fn from(t: &TranslationalTerm) -> Self {
        PriorityRecord { controller: t.controller, axis: t.axis, delta: t.delta }
    }
}

impl From<&RotationalTerm> for PriorityRecord {
    fn from(t: &RotationalTerm) -> Self {
        PriorityRecord { controller: t.controller, axis: None, delta: t.delta.0 }
    }
}

fn pose(b: &PlanarBody) -> [f64; 3] {
    [b.position.x, b.position.y, b.angle]
}

#[derive(Clone, Debug)]
pub struct Env {
    config: EnvConfig,
    catalog: Vec<ControllerSpec>,
    scene: Scene,
    episode: EpisodeParams,
    impedance: ImpedanceParams,
    robot: PlanarBody,
    target: Option<PlanarBody>,
    sensed_force: Vec2,
    potentials: Potentials,
    steps: usize,
    physics_steps: usize,
    termination: Option<Termination>,
    integrals: ForceIntegralState,
}

impl Env {
    pub fn new(config: EnvConfig, episode: EpisodeParams) -> Self {
        let catalog = build_catalog(&config);
        let scene = config.scene();
        let robot = PlanarBody::square(config.robot.width, config.robot.mass, Vec2::new(0.0, 10.0), 0.0);
        let target = config.target.map(|t| PlanarBody::square(t.width, t.mass, Vec2::new(0.0, 20.0), 0.0));
        let mut impedance = ImpedanceParams::simulation();
        impedance.steps_per_selection = episode.period;
        let mut env = Env {
            config,
            catalog,
            scene,
            episode,
            impedance,
            robot,
            target,
            sensed_force: Vec2::zeros(),
            potentials: Potentials::default(),
            steps: 0,
            physics_steps: 0,
            termination: None,
            integrals: ForceIntegralState::default(),
        };
        env.potentials = env.measure();
        env
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn catalog(&self) -> &[ControllerSpec] {
        &self.catalog
    }

    pub fn episode(&self) -> EpisodeParams {
        self.episode
    }

    pub fn robot(&self) -> &PlanarBody {
        &self.robot
    }

    pub fn target(&self) -> Option<&PlanarBody> {
        self.target.as_ref()
    }

    pub fn sensed_force(&self) -> Vec2 {
        self.sensed_force
    }

    pub fn potentials(&self) -> Potentials {
        self.potentials
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn obs_dim(&self) -> usize {
        obs_dim(&self.config)
    }

    /// Deterministic reset from a seed.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>, EnvError> {
        self.reset_with(&mut ChaCha8Rng::seed_from_u64(seed))
    }

    /// Rejection-samples collision-free start poses.
    pub fn reset_with<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<f64>, EnvError> {
        let params = self.config.physics;
        for _ in 0..RESET_ATTEMPTS {
            let (x, y, a) = sample(&self.config.robot_start, rng);
            let robot = PlanarBody::square(self.config.robot.width, self.config.robot.mass, Vec2::new(x, y), a);
            let target = match (self.config.target, &self.config.target_start) {
                (Some(t), Some(range)) => {
                    let (x, y, a) = sample(range, rng);
                    Some(PlanarBody::square(t.width, t.mass, Vec2::new(x, y), a))
                }
                _ => None,
            };
            let mut contacts = Vec::new();
            self.scene.contacts(&robot, params.max_depth, &mut contacts);
            if let Some(tb) = &target {
                self.scene.contacts(tb, params.max_depth, &mut contacts);
                physics::block_contacts(&robot, tb, &mut contacts);
            }
            if contacts.is_empty() {
                self.robot = robot;
                self.target = target;
                self.sensed_force = Vec2::zeros();
                self.steps = 0;
                self.physics_steps = 0;
                self.termination = None;
                self.integrals.reset();
                self.potentials = self.measure();
                return Ok(self.observation());
            }
        }
        Err(EnvError::ResetFailed(self.config.name.clone()))
    }

    fn measure(&self) -> Potentials {
        let g = &self.config.goal;
        let goal = Vec2::new(g[0], g[1]);
        match &self.target {
            Some(tb) => Potentials {
                distance: (tb.position - goal).norm(),
                angle: 0.0,
                approach: (tb.position - self.robot.position).norm(),
            },
            None => Potentials {
                distance: (self.robot.position - goal).norm(),
                angle: wrap_angle(self.robot.angle - g[2]).abs(),
                approach: 0.0,
            },
        }
    }

    pub fn is_success(&self, p: &Potentials) -> bool {
        let s = &self.config.success;
        match self.config.task {
            TaskKind::BlockFit => fit_success(p, s.distance, s.angle_deg.to_radians()),
            TaskKind::BlockPush => push_success(p, s.distance),
        }
    }

    pub fn reward(&self, prev: &Potentials, cur: &Potentials) -> f64 {
        let s = &self.config.success;
        match self.config.task {
            TaskKind::BlockFit => reward_block_fit(prev, cur, s.distance, s.angle_deg.to_radians()),
            TaskKind::BlockPush => reward_block_push(prev, cur, s.distance),
        }
    }

    /// Pose, contact force, wall geometry and (Block Push) the target block pose.
    pub fn observation(&self) -> Vec<f64> {
        let mut o = Vec::with_capacity(self.obs_dim());
        let r = &self.robot;
        o.extend([r.position.x, r.position.y, wrap_angle(r.angle)]);
        let mag = self.sensed_force.norm();
        let dir = if mag > 1e-9 { self.sensed_force / mag } else { Vec2::zeros() };
        o.extend([dir.x, dir.y, mag / FORCE_SCALE]);
        for w in &self.config.walls {
            o.extend([(w.p0[0] + w.p1[0]) * 0.5, (w.p0[1] + w.p1[1]) * 0.5, w.p0[0], w.p0[1], w.p1[0], w.p1[1]]);
        }
        if let Some(tb) = &self.target {
            o.extend([tb.position.x, tb.position.y, wrap_angle(tb.angle)]);
        }
        o
    }

    pub fn step(&mut self, sel: &Selection) -> Result<StepResult, EnvError> {
        self.step_observed(&Command::Select(sel.clone()), &mut |_| {})
    }

    pub fn step_command(&mut self, cmd: &Command) -> Result<StepResult, EnvError> {
        self.step_observed(cmd, &mut |_| {})
    }

    /// Runs `T` physics steps under `cmd`, calling `observer` after each one.
    pub fn step_observed(
        &mut self,
        cmd: &Command,
        observer: &mut dyn FnMut(&PhysicsRecord),
    ) -> Result<StepResult, EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeOver);
        }
        if let Command::Select(sel) = cmd {
            sel.validate(&self.catalog)?;
        }
        self.integrals.reset();
        let hold_anchor = Some(lift(&self.robot.position));
        let ee_goal = match cmd {
            Command::EndEffector(a) => {
                let d = crate::actionspace::ee_action_to_target(a, self.ee_limits());
                Some((self.robot.position + flat(&d.translation), self.robot.angle + d.rotation.0.z))
            }
            Command::Select(_) => None,
        };
        let gravity = self.config.gravity();
        let compensation = -lift(&gravity) * self.robot.mass;
        let prev = self.potentials;
        let mut early = None;

        for _ in 0..self.episode.period {
            let state = self.robot.body_state(&self.sensed_force);
            let target = match (&ee_goal, cmd) {
                (Some((p, a)), _) => {
                    let (dx, dr) = self.ee_limits();
                    let dp = clip_magnitude(&lift(&(p - self.robot.position)), dx);
                    let da = wrap_angle(a - self.robot.angle).clamp(-dr, dr);
                    CommandTarget::from_delta(dp, RotVec(Vec3::new(0.0, 0.0, da)))
                }
                (None, Command::Select(sel)) => {
                    let refs = TargetRefs { tracked: self.target.map(|t| lift(&t.position)), hold_anchor };
                    compose_selection(sel, &self.catalog, &state, &refs, &mut self.integrals)?
                }
                (None, Command::EndEffector(_)) => unreachable!(),
            };
            let drive = impedance_drive(&target, &self.impedance, &compensation);
            let act = Actuation {
                force: flat(&drive.wrench.force),
                torque: drive.wrench.torque.z,
                linear_damping: drive.damping[0],
                angular_damping: drive.damping[5],
            };
            let before = (self.robot, self.target);
            let report =
                physics::step(&self.scene, &self.config.physics, &gravity, &mut self.robot, self.target.as_mut(), &act);
            let finite = self.robot.is_finite()
                && self.target.is_none_or(|t| t.is_finite())
                && report.robot_contact_force.iter().all(|v| v.is_finite());
            if !finite {
                (self.robot, self.target) = before;
                early = Some(Termination::NonFinite);
                break;
            }
            self.sensed_force = report.robot_contact_force;
            self.physics_steps += 1;
            observer(&PhysicsRecord {
                step: self.physics_steps,
                robot: pose(&self.robot),
                robot_twist: [self.robot.velocity.x, self.robot.velocity.y, self.robot.omega],
                contact_force: [self.sensed_force.x, self.sensed_force.y],
                target: self.target.as_ref().map(pose),
                delta_translation: target.translation,
                delta_rotation: target.rotation.0,
                translational: target.translational_terms.iter().map(Into::into).collect(),
                rotational: target.rotational_terms.iter().map(Into::into).collect(),
            });
            if let (Some(line), Some(tb)) = (self.config.fall_line, &self.target) {
                if tb.position.y < line {
                    early = Some(Termination::Fall);
                    break;
                }
            }
        }

        self.steps += 1;
        let cur = self.measure();
        self.potentials = cur;
        let mut reward = self.reward(&prev, &cur);
        let termination = match early {
            Some(Termination::NonFinite) => {
                reward = -super::reward::ALIVE_PENALTY;
                Some(Termination::NonFinite)
            }
            Some(t) => Some(t),
            None if self.is_success(&cur) => Some(Termination::Success),
            None if self.steps >= self.episode.horizon => Some(Termination::Timeout),
            None => None,
        };
        self.termination = termination;
        Ok(StepResult {
            observation: self.observation(),
            reward,
            done: termination.is_some(),
            termination,
            potentials: cur,
        })
    }

    /// `(D_x, D_R)` of this task.
    pub fn ee_limits(&self) -> (f64, f64) {
        let g = super::catalog::CatalogGains::for_task(self.config.task);
        (g.position_clip, g.rotation_clip)
    }

    /// Kinetic energy of all bodies plus stored contact-spring energy.
    pub fn mechanical_energy(&self) -> f64 {
        let ke = self.robot.kinetic_energy() + self.target.map_or(0.0, |t| t.kinetic_energy());
        ke + physics::penalty_energy(&self.scene, &self.config.physics, &self.robot, self.target.as_ref())
    }

    /// Direct access for tests and scripted setups.
    pub fn set_bodies(&mut self, robot: PlanarBody, target: Option<PlanarBody>) {
        self.robot = robot;
        if target.is_some() {
            self.target = target;
        }
        self.potentials = self.measure();
    }
}

fn sample<R: Rng + ?Sized>(r: &PoseRange, rng: &mut R) -> (f64, f64, f64) {
    (rng.random_range(r.x[0]..=r.x[1]), rng.random_range(r.y[0]..=r.y[1]), rng.random_range(r.angle[0]..=r.angle[1]))
}

pub fn obs_dim(config: &EnvConfig) -> usize {
    6 + 6 * config.walls.len() + if config.target.is_some() { 3 } else { 0 }
}
