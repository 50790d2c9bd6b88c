//! Articulated skeletons, poses and forward kinematics.
//!
//! Joints are stored in topological order (every parent precedes its
//! children). The root joint carries no degrees of freedom: its world
//! transform is the pose's `root_position` / `root_orientation`. Every other
//! joint's world transform is `parent ∘ translate(rest_offset) ∘ local`, where
//! `local` is the identity (fixed), a rotation about the joint axis
//! (revolute), or the exponential of an axis-angle 3-vector (spherical).

use std::collections::{HashMap, HashSet};

use nalgebra::Vector3;

use crate::rotations::Rotation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SkeletonError {
    #[error("skeleton has no joints")]
    Empty,
    #[error("skeleton has no root joint")]
    NoRoot,
    #[error("skeleton has two roots: `{0}` and `{1}`")]
    MultipleRoots(String, String),
    #[error("duplicate joint name `{0}`")]
    DuplicateJoint(String),
    #[error("joint `{joint}` references unknown parent `{parent}`")]
    UnknownParent { joint: String, parent: String },
    #[error("parent cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("joint `{joint}` appears before its parent `{parent}` (joints must be in topological order)")]
    NotTopological { joint: String, parent: String },
    #[error("root joint `{0}` must be fixed with a zero rest offset; root motion belongs to the pose")]
    InvalidRoot(String),
    #[error("revolute axis of joint `{0}` is not unit-norm")]
    BadAxis(String),
    #[error("joint `{joint}` has {found} limit pairs, expected 0 or {expected}")]
    LimitCount { joint: String, expected: usize, found: usize },
    #[error("joint `{joint}` has limit [{min}, {max}] with min > max")]
    BadLimit { joint: String, min: f64, max: f64 },
    #[error("joint `{0}` has non-finite geometry")]
    NonFinite(String),
    #[error("duplicate marker name `{0}`")]
    DuplicateMarker(String),
    #[error("marker `{marker}` is attached to unknown joint `{joint}`")]
    UnknownMarkerJoint { marker: String, joint: String },
    #[error("pose has {found} joint values, skeleton expects {expected}")]
    PoseMismatch { expected: usize, found: usize },
    #[error("pose contains non-finite values")]
    NonFinitePose,
    #[error("unknown joint or marker `{0}`")]
    UnknownPoint(String),
    #[error("`{ancestor}` is not an ancestor of `{joint}`")]
    NotAncestor { ancestor: String, joint: String },
}

/// Degrees of freedom of one joint.
#[derive(Debug, Clone, PartialEq)]
pub enum Dof {
    Fixed,
    Revolute { axis: Vector3<f64> },
    /// Three values, an axis-angle (rotation) vector.
    Spherical,
}

impl Dof {
    pub fn count(&self) -> usize {
        match self {
            Dof::Fixed => 0,
            Dof::Revolute { .. } => 1,
            Dof::Spherical => 3,
        }
    }
}

/// Closed interval in radians. Spherical joints interpret their three limits
/// on the intrinsic XYZ Euler decomposition of the local rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limit {
    pub min: f64,
    pub max: f64,
}

impl Limit {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    /// Signed exceedance: positive above `max`, negative below `min`, zero inside.
    pub fn violation(&self, value: f64) -> f64 {
        if value > self.max {
            value - self.max
        } else if value < self.min {
            value - self.min
        } else {
            0.0
        }
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    pub parent: Option<String>,
    /// Meters, in the parent frame.
    pub rest_offset: Vector3<f64>,
    pub dof: Dof,
    /// Empty (unlimited) or one pair per DoF.
    pub limits: Vec<Limit>,
}

impl Joint {
    pub fn root(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            parent: None,
            rest_offset: Vector3::zeros(),
            dof: Dof::Fixed,
            limits: Vec::new(),
        }
    }

    pub fn fixed(name: impl Into<String>, parent: impl Into<String>, offset: Vector3<f64>) -> Self {
        Self {
            name: name.into(),
            parent: Some(parent.into()),
            rest_offset: offset,
            dof: Dof::Fixed,
            limits: Vec::new(),
        }
    }

    pub fn spherical(name: impl Into<String>, parent: impl Into<String>, offset: Vector3<f64>) -> Self {
        Self { dof: Dof::Spherical, ..Self::fixed(name, parent, offset) }
    }

    pub fn revolute(
        name: impl Into<String>,
        parent: impl Into<String>,
        offset: Vector3<f64>,
        axis: Vector3<f64>,
    ) -> Self {
        Self { dof: Dof::Revolute { axis }, ..Self::fixed(name, parent, offset) }
    }

    pub fn with_limits(mut self, limits: Vec<Limit>) -> Self {
        self.limits = limits;
        self
    }

    /// Local rotation for this joint's slice of the pose vector.
    pub fn local_rotation(&self, values: &[f64]) -> Rotation {
        match &self.dof {
            Dof::Fixed => Rotation::identity(),
            Dof::Revolute { axis } => Rotation::from_rotation_vector(&(axis * values[0])),
            Dof::Spherical => Rotation::from_rotation_vector(&Vector3::new(values[0], values[1], values[2])),
        }
    }
}

/// A named point rigidly attached to a joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub name: String,
    pub joint: String,
    pub offset: Vector3<f64>,
}

/// Joint index plus local offset; what correspondences resolve to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRef {
    pub joint: usize,
    pub offset: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub position: Vector3<f64>,
    pub rotation: Rotation,
}

impl Transform {
    pub fn identity() -> Self {
        Self { position: Vector3::zeros(), rotation: Rotation::identity() }
    }

    pub fn apply(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.rotation.matrix() * local
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub root_position: Vector3<f64>,
    pub root_orientation: Rotation,
    /// Radians, ordered by joint, spherical joints contributing three values.
    pub joint_values: Vec<f64>,
}

impl Pose {
    pub fn zero(skeleton: &Skeleton) -> Self {
        Self {
            root_position: Vector3::zeros(),
            root_orientation: Rotation::identity(),
            joint_values: vec![0.0; skeleton.dof_count()],
        }
    }
}

/// World transforms produced by [`Skeleton::fk`].
#[derive(Debug, Clone, PartialEq)]
pub struct FkResult {
    pub joints: Vec<Transform>,
    /// Marker positions with the rotation of the joint they are attached to.
    pub markers: Vec<Transform>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitViolation {
    pub joint: usize,
    /// Index within the joint's DoFs.
    pub dof: usize,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    name: String,
    joints: Vec<Joint>,
    markers: Vec<Marker>,
    parents: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    dof_starts: Vec<usize>,
    dof_count: usize,
    marker_joints: Vec<usize>,
}

const AXIS_NORM_TOL: f64 = 1e-9;

impl Skeleton {
    pub fn new(name: impl Into<String>, joints: Vec<Joint>, markers: Vec<Marker>) -> Result<Self, SkeletonError> {
        if joints.is_empty() {
            return Err(SkeletonError::Empty);
        }
        let mut index = HashMap::new();
        for (i, j) in joints.iter().enumerate() {
            if index.insert(j.name.as_str(), i).is_some() {
                return Err(SkeletonError::DuplicateJoint(j.name.clone()));
            }
        }

        let mut root: Option<usize> = None;
        let mut parents = Vec::with_capacity(joints.len());
        for (i, j) in joints.iter().enumerate() {
            match &j.parent {
                None => {
                    if let Some(r) = root {
                        return Err(SkeletonError::MultipleRoots(joints[r].name.clone(), j.name.clone()));
                    }
                    root = Some(i);
                    parents.push(None);
                }
                Some(p) => match index.get(p.as_str()) {
                    Some(&pi) => parents.push(Some(pi)),
                    None => {
                        return Err(SkeletonError::UnknownParent { joint: j.name.clone(), parent: p.clone() })
                    }
                },
            }
        }
        let root = root.ok_or(SkeletonError::NoRoot)?;

        // Cycles first so the error names the loop rather than an ordering problem.
        for start in 0..joints.len() {
            let mut seen = HashSet::new();
            let mut path = Vec::new();
            let mut cur = Some(start);
            while let Some(c) = cur {
                if !seen.insert(c) {
                    let from = path.iter().position(|&p| p == c).unwrap_or(0);
                    let mut names: Vec<String> = path[from..].iter().map(|&p: &usize| joints[p].name.clone()).collect();
                    names.push(joints[c].name.clone());
                    return Err(SkeletonError::Cycle(names));
                }
                path.push(c);
                cur = parents[c];
            }
        }
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                if p > i {
                    return Err(SkeletonError::NotTopological {
                        joint: joints[i].name.clone(),
                        parent: joints[p].name.clone(),
                    });
                }
            }
        }
        if root != 0 {
            return Err(SkeletonError::NotTopological {
                joint: joints[0].name.clone(),
                parent: joints[0].parent.clone().unwrap_or_default(),
            });
        }
        let r = &joints[root];
        if r.dof != Dof::Fixed || r.rest_offset != Vector3::zeros() {
            return Err(SkeletonError::InvalidRoot(r.name.clone()));
        }

        let mut dof_starts = Vec::with_capacity(joints.len());
        let mut dof_count = 0;
        for j in &joints {
            if !j.rest_offset.iter().all(|v| v.is_finite()) {
                return Err(SkeletonError::NonFinite(j.name.clone()));
            }
            if let Dof::Revolute { axis } = &j.dof {
                if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                    return Err(SkeletonError::BadAxis(j.name.clone()));
                }
            }
            let n = j.dof.count();
            if !j.limits.is_empty() && j.limits.len() != n {
                return Err(SkeletonError::LimitCount { joint: j.name.clone(), expected: n, found: j.limits.len() });
            }
            for l in &j.limits {
                if l.min.is_nan() || l.max.is_nan() || l.min > l.max {
                    return Err(SkeletonError::BadLimit { joint: j.name.clone(), min: l.min, max: l.max });
                }
            }
            dof_starts.push(dof_count);
            dof_count += n;
        }

        let mut children = vec![Vec::new(); joints.len()];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(i);
            }
        }

        let mut marker_names = HashSet::new();
        let mut marker_joints = Vec::with_capacity(markers.len());
        for m in &markers {
            if !marker_names.insert(m.name.as_str()) {
                return Err(SkeletonError::DuplicateMarker(m.name.clone()));
            }
            match index.get(m.joint.as_str()) {
                Some(&ji) => marker_joints.push(ji),
                None => {
                    return Err(SkeletonError::UnknownMarkerJoint { marker: m.name.clone(), joint: m.joint.clone() })
                }
            }
            if !m.offset.iter().all(|v| v.is_finite()) {
                return Err(SkeletonError::NonFinite(m.name.clone()));
            }
        }

        Ok(Self {
            name: name.into(),
            joints,
            markers,
            parents,
            children,
            dof_starts,
            dof_count,
            marker_joints,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn dof_count(&self) -> usize {
        self.dof_count
    }

    pub fn parent(&self, joint: usize) -> Option<usize> {
        self.parents[joint]
    }

    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    /// Offset of the joint's first value in the pose vector.
    pub fn dof_start(&self, joint: usize) -> usize {
        self.dof_starts[joint]
    }

    pub fn joint_values<'a>(&self, joint: usize, values: &'a [f64]) -> &'a [f64] {
        let s = self.dof_starts[joint];
        &values[s..s + self.joints[joint].dof.count()]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn marker_index(&self, name: &str) -> Option<usize> {
        self.markers.iter().position(|m| m.name == name)
    }

    /// Resolves a marker name, falling back to a joint name with zero offset.
    pub fn resolve_point(&self, name: &str) -> Option<PointRef> {
        if let Some(m) = self.marker_index(name) {
            return Some(PointRef { joint: self.marker_joints[m], offset: self.markers[m].offset });
        }
        self.joint_index(name).map(|joint| PointRef { joint, offset: Vector3::zeros() })
    }

    /// One label per pose value: the joint name for revolute joints,
    /// `name.x` / `name.y` / `name.z` for spherical ones.
    pub fn dof_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.dof_count);
        for j in &self.joints {
            match j.dof {
                Dof::Fixed => {}
                Dof::Revolute { .. } => labels.push(j.name.clone()),
                Dof::Spherical => {
                    for c in ["x", "y", "z"] {
                        labels.push(format!("{}.{c}", j.name));
                    }
                }
            }
        }
        labels
    }

    pub fn validate_pose(&self, pose: &Pose) -> Result<(), SkeletonError> {
        if pose.joint_values.len() != self.dof_count {
            return Err(SkeletonError::PoseMismatch { expected: self.dof_count, found: pose.joint_values.len() });
        }
        let finite = pose.joint_values.iter().all(|v| v.is_finite())
            && pose.root_position.iter().all(|v| v.is_finite())
            && pose.root_orientation.matrix().iter().all(|v| v.is_finite());
        if !finite {
            return Err(SkeletonError::NonFinitePose);
        }
        Ok(())
    }

    pub fn fk(&self, pose: &Pose) -> Result<FkResult, SkeletonError> {
        self.validate_pose(pose)?;
        let joints = self.world_transforms(pose);
        let markers = self
            .markers
            .iter()
            .zip(&self.marker_joints)
            .map(|(m, &j)| Transform { position: joints[j].apply(&m.offset), rotation: joints[j].rotation })
            .collect();
        Ok(FkResult { joints, markers })
    }

    /// FK without validation; callers guarantee the pose length.
    pub(crate) fn world_transforms(&self, pose: &Pose) -> Vec<Transform> {
        let mut out: Vec<Transform> = Vec::with_capacity(self.joints.len());
        for (i, joint) in self.joints.iter().enumerate() {
            let t = match self.parents[i] {
                None => Transform { position: pose.root_position, rotation: pose.root_orientation },
                Some(p) => {
                    let parent = out[p];
                    let local = joint.local_rotation(self.joint_values(i, &pose.joint_values));
                    Transform {
                        position: parent.apply(&joint.rest_offset),
                        rotation: parent.rotation * local,
                    }
                }
            };
            out.push(t);
        }
        out
    }

    /// World position of a resolved point given precomputed joint transforms.
    pub fn point_position(&self, world: &[Transform], point: &PointRef) -> Vector3<f64> {
        world[point.joint].apply(&point.offset)
    }

    pub fn check_limits(&self, pose: &Pose) -> Result<Vec<LimitViolation>, SkeletonError> {
        self.validate_pose(pose)?;
        let mut out = Vec::new();
        for (i, joint) in self.joints.iter().enumerate() {
            if joint.limits.is_empty() {
                continue;
            }
            let values = self.limit_coordinates(i, &pose.joint_values);
            for (d, (limit, v)) in joint.limits.iter().zip(values).enumerate() {
                let amount = limit.violation(v);
                if amount != 0.0 {
                    out.push(LimitViolation { joint: i, dof: d, amount });
                }
            }
        }
        Ok(out)
    }

    /// The coordinates limits apply to: the raw value for revolute joints,
    /// intrinsic XYZ Euler angles for spherical ones.
    fn limit_coordinates(&self, joint: usize, values: &[f64]) -> Vec<f64> {
        let j = &self.joints[joint];
        let v = self.joint_values(joint, values);
        match j.dof {
            Dof::Fixed => Vec::new(),
            Dof::Revolute { .. } => vec![v[0]],
            Dof::Spherical => j.local_rotation(v).to_euler_xyz().to_vec(),
        }
    }

    /// Clamps every limited DoF into its interval. Spherical joints are only
    /// rewritten when their Euler decomposition is out of range.
    pub fn project_to_limits(&self, values: &mut [f64]) {
        for (i, joint) in self.joints.iter().enumerate() {
            if joint.limits.is_empty() {
                continue;
            }
            let s = self.dof_starts[i];
            match joint.dof {
                Dof::Fixed => {}
                Dof::Revolute { .. } => values[s] = joint.limits[0].clamp(values[s]),
                Dof::Spherical => {
                    let euler = joint.local_rotation(&values[s..s + 3]).to_euler_xyz();
                    let clamped = [
                        joint.limits[0].clamp(euler[0]),
                        joint.limits[1].clamp(euler[1]),
                        joint.limits[2].clamp(euler[2]),
                    ];
                    if clamped != euler {
                        let v = Rotation::from_euler_xyz(clamped).to_rotation_vector();
                        values[s..s + 3].copy_from_slice(v.as_slice());
                    }
                }
            }
        }
    }

    /// Sum of rest-offset lengths along the chain from `ancestor` down to `joint`.
    pub fn chain_length(&self, ancestor: &str, joint: &str) -> Result<f64, SkeletonError> {
        let a = self.joint_index(ancestor).ok_or_else(|| SkeletonError::UnknownPoint(ancestor.into()))?;
        let mut cur = self.joint_index(joint).ok_or_else(|| SkeletonError::UnknownPoint(joint.into()))?;
        let mut length = 0.0;
        while cur != a {
            length += self.joints[cur].rest_offset.norm();
            cur = self.parents[cur].ok_or_else(|| SkeletonError::NotAncestor {
                ancestor: ancestor.into(),
                joint: joint.into(),
            })?;
        }
        Ok(length)
    }
}
