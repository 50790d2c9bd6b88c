//! Motion containers: keypoint sequences and joint-angle trajectories.

use nalgebra::Vector3;

use crate::skeleton::{Pose, Skeleton, SkeletonError};

/// T frames of N labelled 3D keypoints (meters, world frame, Y up).
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointMotion {
    pub fps: f64,
    pub labels: Vec<String>,
    pub frames: Vec<Vec<Vector3<f64>>>,
}

/// Borrowed view of one keypoint frame.
#[derive(Debug, Clone, Copy)]
pub struct KeypointFrame<'a> {
    pub labels: &'a [String],
    pub positions: &'a [Vector3<f64>],
}

impl KeypointMotion {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, t: usize) -> KeypointFrame<'_> {
        KeypointFrame { labels: &self.labels, positions: &self.frames[t] }
    }

    /// Joint positions of each pose, labelled by joint name.
    pub fn from_poses(skeleton: &Skeleton, poses: &[Pose], fps: f64) -> Result<Self, SkeletonError> {
        let frames = poses
            .iter()
            .map(|p| Ok(skeleton.fk(p)?.joints.iter().map(|t| t.position).collect()))
            .collect::<Result<Vec<_>, SkeletonError>>()?;
        Ok(Self {
            fps,
            labels: skeleton.joints().iter().map(|j| j.name.clone()).collect(),
            frames,
        })
    }
}

/// Per-frame poses on one skeleton, with the skeleton's DoF labels.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub fps: f64,
    pub skeleton: String,
    pub dof_labels: Vec<String>,
    pub frames: Vec<Pose>,
    /// Center-of-mass proxy height per frame, when known.
    pub com_heights: Option<Vec<f64>>,
}

impl JointTrajectory {
    pub fn new(skeleton: &Skeleton, fps: f64, frames: Vec<Pose>) -> Self {
        Self {
            fps,
            skeleton: skeleton.name().to_string(),
            dof_labels: skeleton.dof_labels(),
            frames,
            com_heights: None,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dof_count(&self) -> usize {
        self.dof_labels.len()
    }
}
