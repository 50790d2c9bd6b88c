//! Per-frame retargeting of human poses onto a robot skeleton.
//!
//! For every frame the robot joint vector `q` minimizes
//!
//! ```text
//! Σ_pairs [ λp ‖p_robot(q) − s·p_human‖² + λr d(R_robot(q), R_human)² ]
//!   + w_limit Σ barrier(q)² + w_smooth ‖q − q_prev‖² + w_ref ‖q − q_ref‖²
//! ```
//!
//! where `s` is the human→robot length scale and `d` the geodesic distance.
//! The orientation term enters the least-squares stack as the 3-vector log of
//! `R_humanᵀ R_robot`, whose norm is exactly `d`. The barrier is one-sided and
//! quadratic, starting `limit_margin` inside each revolute limit. After the
//! solve every DoF is clamped into its limits.
//!
//! The robot root takes the scaled human root position and the human root
//! orientation; only joint values are optimized.

use nalgebra::Vector3;

use crate::motion::JointTrajectory;
use crate::rotations::{geodesic_distance, Rotation};
use crate::skeleton::{Dof, Limit, PointRef, Pose, Skeleton, SkeletonError, Transform};
use crate::solver::{minimize, Residuals, SolveOutcome, SolverError, SolverSettings, StopReason};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetargetError {
    #[error("correspondence point `{name}` does not exist on the {side} skeleton")]
    UnresolvableCorrespondence { name: String, side: &'static str },
    #[error("objective is not finite (check the scale factor and inputs for NaN)")]
    NonFiniteObjective,
    #[error("invalid correspondence set: {0}")]
    InvalidCorrespondence(String),
    #[error("invalid retarget options: {0}")]
    InvalidOptions(String),
    #[error("fingertip target count {found} does not match {expected} fingertip pairs")]
    FingertipCount { expected: usize, found: usize },
    #[error("human motion is empty")]
    EmptySequence,
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

impl From<SolverError> for RetargetError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonFiniteObjective => RetargetError::NonFiniteObjective,
        }
    }
}

/// Orientation weight applied by default to root and wrist pairs.
pub const DEFAULT_ORIENTATION_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondencePair {
    pub human: String,
    pub robot: String,
    /// λp, per m².
    pub position_weight: f64,
    /// λr, per rad².
    pub orientation_weight: f64,
}

impl CorrespondencePair {
    pub fn new(human: impl Into<String>, robot: impl Into<String>, position_weight: f64, orientation_weight: f64) -> Self {
        Self { human: human.into(), robot: robot.into(), position_weight, orientation_weight }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingertipPair {
    pub human: String,
    pub robot: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<CorrespondencePair>,
    pub fingertips: Vec<FingertipPair>,
    /// Uniform human→robot length scale.
    pub scale: f64,
}

impl CorrespondenceSet {
    /// Every joint of `skeleton` paired with itself; for identical skeletons.
    pub fn identity(skeleton: &Skeleton, position_weight: f64, orientation_weight: f64) -> Self {
        Self {
            pairs: skeleton
                .joints()
                .iter()
                .map(|j| CorrespondencePair::new(&j.name, &j.name, position_weight, orientation_weight))
                .collect(),
            fingertips: Vec::new(),
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), RetargetError> {
        let bad = |w: f64| !w.is_finite() || w < 0.0;
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(RetargetError::InvalidCorrespondence(format!("scale {} must be positive", self.scale)));
        }
        for p in &self.pairs {
            if bad(p.position_weight) || bad(p.orientation_weight) {
                return Err(RetargetError::InvalidCorrespondence(format!(
                    "pair {} -> {} has a negative or non-finite weight",
                    p.human, p.robot
                )));
            }
        }
        for p in &self.fingertips {
            if bad(p.weight) {
                return Err(RetargetError::InvalidCorrespondence(format!(
                    "fingertip {} -> {} has a negative or non-finite weight",
                    p.human, p.robot
                )));
            }
        }
        if !self.pairs.is_empty() && !self.pairs.iter().any(|p| p.position_weight > 0.0) {
            return Err(RetargetError::InvalidCorrespondence(
                "at least one pair needs a positive position weight".into(),
            ));
        }
        Ok(())
    }
}

/// Ratio of the robot's hip→ankle chain length to the human's.
pub fn leg_length_scale(
    human: &Skeleton,
    human_leg: (&str, &str),
    robot: &Skeleton,
    robot_leg: (&str, &str),
) -> Result<f64, SkeletonError> {
    let h = human.chain_length(human_leg.0, human_leg.1)?;
    let r = robot.chain_length(robot_leg.0, robot_leg.1)?;
    Ok(r / h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizerWeights {
    pub joint_limit: f64,
    /// Distance inside each limit where the barrier starts, radians.
    pub limit_margin: f64,
    pub smoothness: f64,
    pub reference_posture: f64,
}

impl Default for RegularizerWeights {
    fn default() -> Self {
        Self { joint_limit: 10.0, limit_margin: 0.05, smoothness: 0.1, reference_posture: 1e-3 }
    }
}

impl RegularizerWeights {
    pub fn none() -> Self {
        Self { joint_limit: 0.0, limit_margin: 0.05, smoothness: 0.0, reference_posture: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetOptions {
    pub regularizers: RegularizerWeights,
    pub solver: SolverSettings,
    pub warm_start: bool,
    /// Posture the reference regularizer pulls toward; zeros clamped into limits when absent.
    pub reference_pose: Option<Vec<f64>>,
}

impl Default for RetargetOptions {
    fn default() -> Self {
        Self {
            regularizers: RegularizerWeights::default(),
            solver: SolverSettings::default(),
            warm_start: true,
            reference_pose: None,
        }
    }
}

impl RetargetOptions {
    pub fn validate(&self) -> Result<(), RetargetError> {
        let w = &self.regularizers;
        for (name, v) in [
            ("joint_limit", w.joint_limit),
            ("limit_margin", w.limit_margin),
            ("smoothness", w.smoothness),
            ("reference_posture", w.reference_posture),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(RetargetError::InvalidOptions(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let s = &self.solver;
        if s.max_iterations < 1 {
            return Err(RetargetError::InvalidOptions("max_iterations must be >= 1".into()));
        }
        if !(s.fd_step > 0.0) || !(s.gradient_tolerance >= 0.0) || !(s.initial_damping > 0.0) {
            return Err(RetargetError::InvalidOptions("solver step, tolerance and damping must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetReport {
    /// Final objective after limit projection.
    pub objective: f64,
    pub iterations: usize,
    /// Objective at the start point and after every accepted solver step.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    /// Distance between each robot point and its scaled human target, meters.
    pub position_residuals: Vec<f64>,
    /// Geodesic distance per pair, radians.
    pub orientation_residuals: Vec<f64>,
    pub limit_violations: usize,
    /// Set when the frame failed and the previous solution was carried forward.
    pub failure: Option<String>,
}

impl RetargetReport {
    pub fn max_position_residual(&self) -> f64 {
        self.position_residuals.iter().copied().fold(0.0, f64::max)
    }

    fn failed(message: String) -> Self {
        Self {
            objective: f64::NAN,
            iterations: 0,
            objective_trace: Vec::new(),
            converged: false,
            position_residuals: Vec::new(),
            orientation_residuals: Vec::new(),
            limit_violations: 0,
            failure: Some(message),
        }
    }
}

struct PositionTerm {
    point: PointRef,
    target: Vector3<f64>,
    sqrt_weight: f64,
}

struct OrientationTerm {
    joint: usize,
    target: Rotation,
    sqrt_weight: f64,
}

/// Stacked residuals for one frame.
struct FrameProblem<'a> {
    robot: &'a Skeleton,
    root: Transform,
    positions: Vec<PositionTerm>,
    orientations: Vec<OrientationTerm>,
    limits: &'a [(usize, Limit)],
    limit_sqrt_weight: f64,
    limit_margin: f64,
    smooth: Option<(&'a [f64], f64)>,
    reference: Option<(&'a [f64], f64)>,
}

impl FrameProblem<'_> {
    fn pose(&self, q: &[f64]) -> Pose {
        Pose { root_position: self.root.position, root_orientation: self.root.rotation, joint_values: q.to_vec() }
    }
}

impl Residuals for FrameProblem<'_> {
    fn len(&self) -> usize {
        let n = self.robot.dof_count();
        3 * self.positions.len()
            + 3 * self.orientations.len()
            + if self.limit_sqrt_weight > 0.0 { self.limits.len() } else { 0 }
            + if self.smooth.is_some() { n } else { 0 }
            + if self.reference.is_some() { n } else { 0 }
    }

    fn eval(&self, q: &[f64], out: &mut [f64]) {
        let world = self.robot.world_transforms(&self.pose(q));
        let mut k = 0;
        for t in &self.positions {
            let d = (self.robot.point_position(&world, &t.point) - t.target) * t.sqrt_weight;
            out[k..k + 3].copy_from_slice(d.as_slice());
            k += 3;
        }
        for t in &self.orientations {
            let err = (t.target.inverse() * world[t.joint].rotation).to_rotation_vector() * t.sqrt_weight;
            out[k..k + 3].copy_from_slice(err.as_slice());
            k += 3;
        }
        if self.limit_sqrt_weight > 0.0 {
            for (i, limit) in self.limits {
                out[k] = self.limit_sqrt_weight * barrier(q[*i], limit, self.limit_margin);
                k += 1;
            }
        }
        if let Some((prev, w)) = self.smooth {
            for (qi, pi) in q.iter().zip(prev) {
                out[k] = w * (qi - pi);
                k += 1;
            }
        }
        if let Some((reference, w)) = self.reference {
            for (qi, ri) in q.iter().zip(reference) {
                out[k] = w * (qi - ri);
                k += 1;
            }
        }
    }
}

/// Zero inside `[min + margin, max − margin]`, linear excess outside.
fn barrier(value: f64, limit: &Limit, margin: f64) -> f64 {
    let (mut lo, mut hi) = (limit.min + margin, limit.max - margin);
    if lo > hi {
        let mid = 0.5 * (limit.min + limit.max);
        lo = mid;
        hi = mid;
    }
    if value > hi {
        value - hi
    } else if value < lo {
        value - lo
    } else {
        0.0
    }
}

struct ResolvedPair {
    human: PointRef,
    robot: PointRef,
    position_weight: f64,
    orientation_weight: f64,
}

/// Correspondences resolved against a fixed human/robot skeleton pair.
pub struct Retargeter<'a> {
    human: &'a Skeleton,
    robot: &'a Skeleton,
    scale: f64,
    pairs: Vec<ResolvedPair>,
    options: RetargetOptions,
    limited: Vec<(usize, Limit)>,
    reference: Vec<f64>,
}

impl<'a> Retargeter<'a> {
    pub fn new(
        human: &'a Skeleton,
        robot: &'a Skeleton,
        corr: &CorrespondenceSet,
        options: &RetargetOptions,
    ) -> Result<Self, RetargetError> {
        corr.validate()?;
        options.validate()?;
        if corr.pairs.is_empty() {
            return Err(RetargetError::InvalidCorrespondence("no body pairs".into()));
        }
        let pairs = corr
            .pairs
            .iter()
            .map(|p| {
                Ok(ResolvedPair {
                    human: resolve(human, &p.human, "human")?,
                    robot: resolve(robot, &p.robot, "robot")?,
                    position_weight: p.position_weight,
                    orientation_weight: p.orientation_weight,
                })
            })
            .collect::<Result<Vec<_>, RetargetError>>()?;
        let limited = revolute_limits(robot);
        let reference = reference_pose(robot, options)?;
        Ok(Self { human, robot, scale: corr.scale, pairs, options: options.clone(), limited, reference })
    }

    pub fn robot(&self) -> &Skeleton {
        self.robot
    }

    /// Reference posture the regularizer pulls toward (also the cold start).
    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    /// Solves one frame. `warm_start` seeds the solver (the reference posture
    /// otherwise); `previous` feeds the smoothness term.
    pub fn solve_frame(
        &self,
        human_pose: &Pose,
        warm_start: Option<&[f64]>,
        previous: Option<&[f64]>,
    ) -> Result<(Pose, RetargetReport), RetargetError> {
        let fk = self.human.fk(human_pose)?;
        let n = self.robot.dof_count();
        for s in [warm_start, previous].into_iter().flatten() {
            if s.len() != n {
                return Err(SkeletonError::PoseMismatch { expected: n, found: s.len() }.into());
            }
        }
        let root = Transform { position: human_pose.root_position * self.scale, rotation: human_pose.root_orientation };

        let mut positions = Vec::new();
        let mut orientations = Vec::new();
        for p in &self.pairs {
            let human_world = &fk.joints[p.human.joint];
            if p.position_weight > 0.0 {
                positions.push(PositionTerm {
                    point: p.robot,
                    target: human_world.apply(&p.human.offset) * self.scale,
                    sqrt_weight: p.position_weight.sqrt(),
                });
            }
            if p.orientation_weight > 0.0 {
                orientations.push(OrientationTerm {
                    joint: p.robot.joint,
                    target: human_world.rotation,
                    sqrt_weight: p.orientation_weight.sqrt(),
                });
            }
        }
        let w = &self.options.regularizers;
        let problem = FrameProblem {
            robot: self.robot,
            root,
            positions,
            orientations,
            limits: &self.limited,
            limit_sqrt_weight: w.joint_limit.sqrt(),
            limit_margin: w.limit_margin,
            smooth: previous.filter(|_| w.smoothness > 0.0).map(|p| (p, w.smoothness.sqrt())),
            reference: (w.reference_posture > 0.0).then(|| (self.reference.as_slice(), w.reference_posture.sqrt())),
        };
        let start = warm_start.unwrap_or(&self.reference);
        let outcome = minimize(&problem, start, &self.options.solver)?;
        let pose = finish(self.robot, &problem, outcome.x.clone());

        let world = self.robot.world_transforms(&pose);
        let mut position_residuals = Vec::with_capacity(self.pairs.len());
        let mut orientation_residuals = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            let h = &fk.joints[p.human.joint];
            let target = h.apply(&p.human.offset) * self.scale;
            position_residuals.push((self.robot.point_position(&world, &p.robot) - target).norm());
            orientation_residuals.push(geodesic_distance(&world[p.robot.joint].rotation, &h.rotation));
        }
        let report = report(self.robot, &problem, &pose, outcome, position_residuals, orientation_residuals)?;
        Ok((pose, report))
    }
}

fn resolve(skeleton: &Skeleton, name: &str, side: &'static str) -> Result<PointRef, RetargetError> {
    skeleton
        .resolve_point(name)
        .ok_or_else(|| RetargetError::UnresolvableCorrespondence { name: name.to_string(), side })
}

fn revolute_limits(robot: &Skeleton) -> Vec<(usize, Limit)> {
    robot
        .joints()
        .iter()
        .enumerate()
        .filter(|(_, j)| matches!(j.dof, Dof::Revolute { .. }) && !j.limits.is_empty())
        .map(|(i, j)| (robot.dof_start(i), j.limits[0]))
        .collect()
}

fn reference_pose(robot: &Skeleton, options: &RetargetOptions) -> Result<Vec<f64>, RetargetError> {
    let mut reference = match &options.reference_pose {
        Some(r) if r.len() != robot.dof_count() => {
            return Err(RetargetError::InvalidOptions(format!(
                "reference pose has {} values, robot has {} DoFs",
                r.len(),
                robot.dof_count()
            )))
        }
        Some(r) => r.clone(),
        None => vec![0.0; robot.dof_count()],
    };
    robot.project_to_limits(&mut reference);
    Ok(reference)
}

fn finish(robot: &Skeleton, problem: &FrameProblem<'_>, mut q: Vec<f64>) -> Pose {
    robot.project_to_limits(&mut q);
    problem.pose(&q)
}

fn report(
    robot: &Skeleton,
    problem: &FrameProblem<'_>,
    pose: &Pose,
    outcome: SolveOutcome,
    position_residuals: Vec<f64>,
    orientation_residuals: Vec<f64>,
) -> Result<RetargetReport, RetargetError> {
    let mut r = vec![0.0; problem.len()];
    problem.eval(&pose.joint_values, &mut r);
    let objective: f64 = r.iter().map(|v| v * v).sum();
    if !objective.is_finite() {
        return Err(RetargetError::NonFiniteObjective);
    }
    Ok(RetargetReport {
        objective,
        iterations: outcome.iterations,
        objective_trace: outcome.objective_trace,
        converged: outcome.stop != StopReason::MaxIterations,
        position_residuals,
        orientation_residuals,
        limit_violations: robot.check_limits(pose)?.len(),
        failure: None,
    })
}

pub fn retarget_frame(
    human: &Skeleton,
    human_pose: &Pose,
    robot: &Skeleton,
    corr: &CorrespondenceSet,
    options: &RetargetOptions,
    warm_start: Option<&Pose>,
) -> Result<(Pose, RetargetReport), RetargetError> {
    let rt = Retargeter::new(human, robot, corr, options)?;
    rt.solve_frame(human_pose, warm_start.map(|p| p.joint_values.as_slice()), None)
}

/// Retargets a whole motion. Frame `t` warm-starts from frame `t − 1` when
/// enabled, and the smoothness term always refers to the previous solution.
///
/// A frame that fails is reported (its `failure` is set) and the previous
/// solution, or the reference posture for the first frame, is carried forward
/// with this frame's root.
pub fn retarget_sequence(
    human: &Skeleton,
    motion: &[Pose],
    robot: &Skeleton,
    corr: &CorrespondenceSet,
    options: &RetargetOptions,
    fps: f64,
) -> Result<(JointTrajectory, Vec<RetargetReport>), RetargetError> {
    if motion.is_empty() {
        return Err(RetargetError::EmptySequence);
    }
    let rt = Retargeter::new(human, robot, corr, options)?;
    let mut frames: Vec<Pose> = Vec::with_capacity(motion.len());
    let mut reports = Vec::with_capacity(motion.len());
    for human_pose in motion {
        let previous = frames.last().map(|p| p.joint_values.as_slice());
        let warm = if options.warm_start { previous } else { None };
        match rt.solve_frame(human_pose, warm, previous) {
            Ok((pose, report)) => {
                frames.push(pose);
                reports.push(report);
            }
            Err(e) => {
                let values = previous.map(<[f64]>::to_vec).unwrap_or_else(|| rt.reference().to_vec());
                let root_position = human_pose.root_position * corr.scale;
                let carried = Pose {
                    root_position: if root_position.iter().all(|v| v.is_finite()) {
                        root_position
                    } else {
                        frames.last().map(|p| p.root_position).unwrap_or_else(Vector3::zeros)
                    },
                    root_orientation: human_pose.root_orientation,
                    joint_values: values,
                };
                frames.push(carried);
                reports.push(RetargetReport::failed(e.to_string()));
            }
        }
    }
    Ok((JointTrajectory::new(robot, fps, frames), reports))
}

/// Solves a hand: fingertip position terms plus the joint-limit barrier, with
/// the hand root held at `wrist`. `targets[i]` is the world-frame target for
/// `pairs[i].robot`.
pub fn retarget_hand(
    targets: &[Vector3<f64>],
    hand: &Skeleton,
    pairs: &[FingertipPair],
    wrist: Transform,
    options: &RetargetOptions,
    warm_start: Option<&[f64]>,
) -> Result<(Pose, RetargetReport), RetargetError> {
    options.validate()?;
    if pairs.is_empty() {
        return Err(RetargetError::InvalidCorrespondence("no fingertip pairs".into()));
    }
    if targets.len() != pairs.len() {
        return Err(RetargetError::FingertipCount { expected: pairs.len(), found: targets.len() });
    }
    let mut positions = Vec::with_capacity(pairs.len());
    for (p, t) in pairs.iter().zip(targets) {
        if !p.weight.is_finite() || p.weight < 0.0 {
            return Err(RetargetError::InvalidCorrespondence(format!("fingertip {} has a bad weight", p.robot)));
        }
        positions.push(PositionTerm { point: resolve(hand, &p.robot, "hand")?, target: *t, sqrt_weight: p.weight.sqrt() });
    }
    let limited = revolute_limits(hand);
    let reference = reference_pose(hand, options)?;
    if let Some(w) = warm_start {
        if w.len() != hand.dof_count() {
            return Err(SkeletonError::PoseMismatch { expected: hand.dof_count(), found: w.len() }.into());
        }
    }
    let problem = FrameProblem {
        robot: hand,
        root: wrist,
        positions,
        orientations: Vec::new(),
        limits: &limited,
        limit_sqrt_weight: options.regularizers.joint_limit.sqrt(),
        limit_margin: options.regularizers.limit_margin,
        smooth: None,
        reference: None,
    };
    let outcome = minimize(&problem, warm_start.unwrap_or(&reference), &options.solver)?;
    let pose = finish(hand, &problem, outcome.x.clone());
    let world = hand.world_transforms(&pose);
    let residuals = problem.positions.iter().map(|t| (hand.point_position(&world, &t.point) - t.target).norm()).collect();
    report(hand, &problem, &pose, outcome, residuals, Vec::new())
        .map(|r| (pose, r))
}
