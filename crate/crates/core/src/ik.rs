//! Hierarchical reconstruction of joint rotations from 3D keypoints.
//!
//! Rotations are solved from the root outward. For each joint the observed
//! child bone vectors are expressed in the parent's (already solved) frame and
//! aligned with the rest offsets of the children:
//!
//! * one child: [`rodrigues_align`], the minimal (swing-only) rotation, so the
//!   twist about the bone axis is zero;
//! * several children: [`procrustes`] over all child bones, equally weighted;
//! * no children: identity, since nothing observes the rotation.
//!
//! The root is aligned the same way, directly in world coordinates, and its
//! position is the root keypoint. Bone lengths are never rescaled; only
//! directions are matched.

use nalgebra::{Matrix3xX, Vector3};

use crate::motion::{KeypointFrame, KeypointMotion};
use crate::rotations::{procrustes_with, rodrigues_align_with, Quaternion, Rotation, RotationError, Tolerances};
use crate::skeleton::{Dof, Pose, Skeleton};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IkError {
    #[error("frame has {found} keypoints, skeleton has {expected} joints")]
    LabelCount { expected: usize, found: usize },
    #[error("skeleton joint `{0}` has no keypoint in the frame")]
    MissingLabel(String),
    #[error("joint `{0}` cannot be reconstructed: only spherical joints and fixed leaves are supported")]
    UnsupportedJoint(String),
    #[error("keypoint `{0}` is not finite")]
    NonFinite(String),
    #[error("joint `{joint}`: {source}")]
    Rotation {
        joint: String,
        #[source]
        source: RotationError,
    },
    #[error("frame {frame}: {source}")]
    Frame {
        frame: usize,
        #[source]
        source: Box<IkError>,
    },
    #[error("keypoint sequence is empty")]
    EmptySequence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub tolerances: Tolerances,
    /// Keep consecutive joint quaternions in the same hemisphere.
    pub continuity: bool,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), continuity: true }
    }
}

/// Reconstructs one frame into a pose on `skeleton` (all non-root joints spherical).
pub fn reconstruct_frame(skeleton: &Skeleton, frame: &KeypointFrame<'_>) -> Result<Pose, IkError> {
    reconstruct_frame_with(skeleton, frame, &Tolerances::default())
}

pub fn reconstruct_frame_with(
    skeleton: &Skeleton,
    frame: &KeypointFrame<'_>,
    tol: &Tolerances,
) -> Result<Pose, IkError> {
    check_supported(skeleton)?;
    let order = label_order(skeleton, frame.labels)?;
    let kp: Vec<Vector3<f64>> = order.iter().map(|&i| frame.positions[i]).collect();
    for (j, p) in skeleton.joints().iter().zip(&kp) {
        if !p.iter().all(|v| v.is_finite()) {
            return Err(IkError::NonFinite(j.name.clone()));
        }
    }

    let joints = skeleton.joints();
    let mut world: Vec<Rotation> = Vec::with_capacity(joints.len());
    let mut pose = Pose::zero(skeleton);
    pose.root_position = kp[0];

    for (i, joint) in joints.iter().enumerate() {
        let parent_rot = skeleton.parent(i).map(|p| world[p]).unwrap_or_else(Rotation::identity);
        let to_parent = parent_rot.inverse();
        let children = skeleton.children(i);
        let wrap = |source| IkError::Rotation { joint: joint.name.clone(), source };

        let local = match children {
            [] => Rotation::identity(),
            [c] => {
                let observed = to_parent.matrix() * (kp[*c] - kp[i]);
                rodrigues_align_with(&joints[*c].rest_offset, &observed, tol).map_err(wrap)?
            }
            many => {
                let template = Matrix3xX::from_columns(&many.iter().map(|&c| joints[c].rest_offset).collect::<Vec<_>>());
                let observed = Matrix3xX::from_columns(
                    &many.iter().map(|&c| to_parent.matrix() * (kp[c] - kp[i])).collect::<Vec<_>>(),
                );
                procrustes_with(&template, &observed, tol).map_err(wrap)?
            }
        };

        if i == 0 {
            pose.root_orientation = local;
        } else if joint.dof == Dof::Spherical {
            let s = skeleton.dof_start(i);
            pose.joint_values[s..s + 3].copy_from_slice(local.to_rotation_vector().as_slice());
        }
        world.push(parent_rot * local);
    }
    Ok(pose)
}

/// Reconstructs every frame, then (when enabled) flips joint rotation vectors
/// so consecutive quaternions have a nonnegative dot product.
pub fn reconstruct_sequence(
    skeleton: &Skeleton,
    motion: &KeypointMotion,
    options: &IkOptions,
) -> Result<Vec<Pose>, IkError> {
    if motion.is_empty() {
        return Err(IkError::EmptySequence);
    }
    let mut poses = (0..motion.len())
        .map(|t| {
            reconstruct_frame_with(skeleton, &motion.frame(t), &options.tolerances)
                .map_err(|e| IkError::Frame { frame: t, source: Box::new(e) })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if options.continuity {
        enforce_hemisphere_continuity(skeleton, &mut poses);
    }
    Ok(poses)
}

/// Sequential post-pass: for each spherical joint, replaces `v` by the
/// equivalent rotation vector of `−q(v)` whenever `q(v)` points away from the
/// previous frame's quaternion.
pub fn enforce_hemisphere_continuity(skeleton: &Skeleton, poses: &mut [Pose]) {
    for (i, joint) in skeleton.joints().iter().enumerate() {
        if joint.dof != Dof::Spherical {
            continue;
        }
        let s = skeleton.dof_start(i);
        for t in 1..poses.len() {
            let prev = Vector3::from_column_slice(&poses[t - 1].joint_values[s..s + 3]);
            let cur = Vector3::from_column_slice(&poses[t].joint_values[s..s + 3]);
            let qp = Quaternion::from_rotation_vector(&prev);
            let qc = Quaternion::from_rotation_vector(&cur);
            if qp.dot(&qc) >= 0.0 {
                continue;
            }
            let mut flipped = qc.neg().to_rotation_vector();
            if cur.norm() == 0.0 {
                // -identity: a full turn about the previous axis
                let axis = if prev.norm() > 0.0 { prev.normalize() } else { Vector3::x() };
                flipped = axis * (2.0 * std::f64::consts::PI);
            }
            poses[t].joint_values[s..s + 3].copy_from_slice(flipped.as_slice());
        }
    }
}

fn check_supported(skeleton: &Skeleton) -> Result<(), IkError> {
    for (i, j) in skeleton.joints().iter().enumerate().skip(1) {
        let ok = match j.dof {
            Dof::Spherical => true,
            Dof::Fixed => skeleton.children(i).is_empty(),
            Dof::Revolute { .. } => false,
        };
        if !ok {
            return Err(IkError::UnsupportedJoint(j.name.clone()));
        }
    }
    Ok(())
}

/// For each skeleton joint, the index of its keypoint in `labels`.
fn label_order(skeleton: &Skeleton, labels: &[String]) -> Result<Vec<usize>, IkError> {
    if labels.len() != skeleton.joint_count() {
        return Err(IkError::LabelCount { expected: skeleton.joint_count(), found: labels.len() });
    }
    skeleton
        .joints()
        .iter()
        .enumerate()
        .map(|(i, j)| {
            if labels[i] == j.name {
                Ok(i)
            } else {
                labels.iter().position(|l| *l == j.name).ok_or_else(|| IkError::MissingLabel(j.name.clone()))
            }
        })
        .collect()
}
