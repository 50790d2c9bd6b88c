//! Per-frame pose features for motion-generation models.
//!
//! Each feature frame holds, in order:
//!
//! | block | size | content |
//! |---|---|---|
//! | `ṙᵃ` | 1 | root angular velocity about +Y, rad/s |
//! | `ṙˣ, ṙᶻ` | 2 | root linear velocity on the XZ plane, heading frame, m/s |
//! | `rʸ` | 1 | root height, m |
//! | `jᵖ` | 3j | joint positions relative to the root, heading frame |
//! | `jᵛ` | 3j | joint velocities, heading frame |
//! | `jʳ` | 6j | local joint rotations, 6D |
//! | `cᶠ` | 4 | foot contacts (left heel, left toe, right heel, right toe) |
//!
//! where `j` counts the non-root joints, so `D = 8 + 12j`. Velocities are
//! the difference between frames `t` and `t + 1` times fps: the central
//! difference at the half-frame. A motion of `T` frames therefore yields
//! `T − 1` feature frames, each expressed in the heading frame of frame `t`.
//! The heading is the yaw of the root's +Z axis about +Y.

use nalgebra::Vector3;

use crate::ik::{reconstruct_sequence, IkError, IkOptions};
use crate::motion::KeypointMotion;
use crate::rotations::Rotation;
use crate::skeleton::{PointRef, Pose, Skeleton, SkeletonError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("need at least 2 frames, found {0}")]
    TooShort(usize),
    #[error("fps must be finite and positive, got {0}")]
    BadFps(f64),
    #[error("contact threshold must be finite and >= 0, got {0}")]
    BadThreshold(f64),
    #[error("contact points not found on the skeleton: {}", .0.join(", "))]
    MissingContactMarkers(Vec<String>),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Ik(#[from] IkError),
}

pub const DEFAULT_CONTACT_THRESHOLD: f64 = 1e-3;

/// Feature width for `joints` non-root joints.
pub const fn feature_dim(joints: usize) -> usize {
    8 + 12 * joints
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureOptions {
    /// Marker or joint names for left heel, left toe, right heel, right toe.
    pub contact_points: [String; 4],
    /// A point is in contact when its squared speed is below this.
    pub contact_threshold: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self {
            contact_points: ["left_ankle", "left_foot", "right_ankle", "right_foot"].map(String::from),
            contact_threshold: DEFAULT_CONTACT_THRESHOLD,
        }
    }
}

/// Start index and length of each block for `joints` non-root joints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub joints: usize,
}

impl FeatureLayout {
    pub const ROOT_YAW_RATE: usize = 0;
    pub const ROOT_VELOCITY_XZ: usize = 1;
    pub const ROOT_HEIGHT: usize = 3;
    pub const JOINT_POSITIONS: usize = 4;

    pub fn dim(&self) -> usize {
        feature_dim(self.joints)
    }

    pub fn joint_velocities(&self) -> usize {
        4 + 3 * self.joints
    }

    pub fn joint_rotations(&self) -> usize {
        4 + 6 * self.joints
    }

    pub fn contacts(&self) -> usize {
        4 + 12 * self.joints
    }
}

fn heading(rotation: &Rotation) -> f64 {
    let f = rotation.transform_vector(&Vector3::z());
    f.x.atan2(f.z)
}

fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(std::f64::consts::TAU);
    if a > std::f64::consts::PI {
        a - std::f64::consts::TAU
    } else {
        a
    }
}

/// Builds `T − 1` feature frames from a pose sequence.
pub fn build_pose_features(
    skeleton: &Skeleton,
    poses: &[Pose],
    fps: f64,
    options: &FeatureOptions,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    if poses.len() < 2 {
        return Err(FeatureError::TooShort(poses.len()));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(FeatureError::BadFps(fps));
    }
    if !(options.contact_threshold.is_finite() && options.contact_threshold >= 0.0) {
        return Err(FeatureError::BadThreshold(options.contact_threshold));
    }
    let missing: Vec<String> =
        options.contact_points.iter().filter(|n| skeleton.resolve_point(n).is_none()).cloned().collect();
    if !missing.is_empty() {
        return Err(FeatureError::MissingContactMarkers(missing));
    }
    let contacts: Vec<PointRef> = options.contact_points.iter().filter_map(|n| skeleton.resolve_point(n)).collect();

    let world = poses
        .iter()
        .map(|p| {
            skeleton.validate_pose(p)?;
            Ok(skeleton.world_transforms(p))
        })
        .collect::<Result<Vec<_>, SkeletonError>>()?;

    let layout = FeatureLayout { joints: skeleton.joint_count() - 1 };
    let mut out = Vec::with_capacity(poses.len() - 1);
    for t in 0..poses.len() - 1 {
        let (now, next) = (&world[t], &world[t + 1]);
        let yaw = heading(&now[0].rotation);
        let to_heading = Rotation::from_axis_angle(&Vector3::y(), -yaw);
        let mut f = Vec::with_capacity(layout.dim());

        f.push(wrap(heading(&next[0].rotation) - yaw) * fps);
        let root_vel = to_heading.transform_vector(&((next[0].position - now[0].position) * fps));
        f.extend([root_vel.x, root_vel.z]);
        f.push(now[0].position.y);

        let root = now[0].position;
        for tr in &now[1..] {
            f.extend(to_heading.transform_vector(&(tr.position - root)).iter());
        }
        for (a, b) in now[1..].iter().zip(&next[1..]) {
            f.extend(to_heading.transform_vector(&((b.position - a.position) * fps)).iter());
        }
        for (i, joint) in skeleton.joints().iter().enumerate().skip(1) {
            f.extend(joint.local_rotation(skeleton.joint_values(i, &poses[t].joint_values)).to_rot6d());
        }
        for c in &contacts {
            let v = (skeleton.point_position(next, c) - skeleton.point_position(now, c)) * fps;
            f.push(if v.norm_squared() < options.contact_threshold { 1.0 } else { 0.0 });
        }
        debug_assert_eq!(f.len(), layout.dim());
        out.push(f);
    }
    Ok(out)
}

/// Reconstructs joint rotations from keypoints, then builds features.
pub fn build_pose_features_from_keypoints(
    skeleton: &Skeleton,
    motion: &KeypointMotion,
    ik: &IkOptions,
    options: &FeatureOptions,
) -> Result<Vec<Vec<f64>>, FeatureError> {
    let poses = reconstruct_sequence(skeleton, motion, ik)?;
    build_pose_features(skeleton, &poses, motion.fps, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{Joint, Marker};

    fn biped() -> Skeleton {
        let y = Vector3::y();
        Skeleton::new(
            "biped",
            vec![
                Joint::root("pelvis"),
                Joint::spherical("left_hip", "pelvis", Vector3::new(0.1, 0.0, 0.0)),
                Joint::revolute("left_knee", "left_hip", -0.4 * y, Vector3::x()),
                Joint::spherical("right_hip", "pelvis", Vector3::new(-0.1, 0.0, 0.0)),
                Joint::revolute("right_knee", "right_hip", -0.4 * y, Vector3::x()),
            ],
            vec![
                Marker { name: "left_ankle".into(), joint: "left_knee".into(), offset: -0.4 * y },
                Marker { name: "left_foot".into(), joint: "left_knee".into(), offset: Vector3::new(0.0, -0.45, 0.1) },
                Marker { name: "right_ankle".into(), joint: "right_knee".into(), offset: -0.4 * y },
                Marker { name: "right_foot".into(), joint: "right_knee".into(), offset: Vector3::new(0.0, -0.45, 0.1) },
            ],
        )
        .unwrap()
    }

    #[test]
    fn stationary_sequence() {
        let s = biped();
        let mut p = Pose::zero(&s);
        p.root_position.y = 0.9;
        p.joint_values = vec![0.1, 0.2, 0.0, 0.4, 0.0, 0.0, -0.1, 0.3];
        let f = build_pose_features(&s, &vec![p; 4], 30.0, &FeatureOptions::default()).unwrap();
        let l = FeatureLayout { joints: 4 };
        assert_eq!(f.len(), 3);
        for row in &f {
            assert_eq!(row.len(), l.dim());
            assert_eq!(&row[0..3], &[0.0, 0.0, 0.0]);
            assert_eq!(row[3], 0.9);
            assert!(row[l.joint_velocities()..l.joint_rotations()].iter().all(|v| *v == 0.0));
            assert_eq!(&row[l.contacts()..], &[1.0; 4]);
        }
    }

    #[test]
    fn yaw_spin_rate() {
        let s = biped();
        let omega = 1.3;
        let fps = 50.0;
        let poses: Vec<Pose> = (0..6)
            .map(|t| {
                let mut p = Pose::zero(&s);
                p.root_orientation = Rotation::from_axis_angle(&Vector3::y(), omega * t as f64 / fps);
                p
            })
            .collect();
        let f = build_pose_features(&s, &poses, fps, &FeatureOptions::default()).unwrap();
        for row in &f {
            assert!((row[0] - omega).abs() < 1e-9);
            for (a, b) in row[4..16].iter().zip(&f[0][4..16]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        let s = biped();
        let p = Pose::zero(&s);
        assert_eq!(build_pose_features(&s, &[p.clone()], 30.0, &FeatureOptions::default()), Err(FeatureError::TooShort(1)));
        let mut o = FeatureOptions::default();
        o.contact_points[1] = "left_toe".into();
        assert_eq!(
            build_pose_features(&s, &[p.clone(), p], 30.0, &o),
            Err(FeatureError::MissingContactMarkers(vec!["left_toe".into()]))
        );
        assert_eq!(wrap(3.0 * std::f64::consts::PI), std::f64::consts::PI);
        assert_eq!(feature_dim(21), 260);
        assert_eq!(feature_dim(51), 620);
    }
}
