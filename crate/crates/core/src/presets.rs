//! Built-in skeletons, correspondence maps and a synthetic walk.
//!
//! Coordinates are Y up, +Z forward, +X to the character's left, meters.
//! Every skeleton rests in a T-pose so zero joint values line up across them.

use nalgebra::Vector3;

use crate::retarget::{leg_length_scale, CorrespondencePair, CorrespondenceSet, DEFAULT_ORIENTATION_WEIGHT};
use crate::rotations::Rotation;
use crate::skeleton::{Joint, Limit, Marker, Pose, Skeleton};

fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
    Vector3::new(x, y, z)
}

/// Joint names of the 24-joint human body, in topological order.
pub const HUMAN24_JOINTS: [&str; 24] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
];

/// 24 spherical joints without limits, body-model style.
pub fn human24() -> Skeleton {
    let bones: [(&str, &str, Vector3<f64>); 23] = [
        ("left_hip", "pelvis", v(0.06, -0.09, 0.0)),
        ("right_hip", "pelvis", v(-0.06, -0.09, 0.0)),
        ("spine1", "pelvis", v(0.0, 0.11, -0.01)),
        ("left_knee", "left_hip", v(0.04, -0.38, 0.0)),
        ("right_knee", "right_hip", v(-0.04, -0.38, 0.0)),
        ("spine2", "spine1", v(0.0, 0.14, 0.01)),
        ("left_ankle", "left_knee", v(-0.01, -0.40, -0.04)),
        ("right_ankle", "right_knee", v(0.01, -0.40, -0.04)),
        ("spine3", "spine2", v(0.0, 0.05, 0.0)),
        ("left_foot", "left_ankle", v(0.02, -0.06, 0.12)),
        ("right_foot", "right_ankle", v(-0.02, -0.06, 0.12)),
        ("neck", "spine3", v(0.0, 0.21, -0.03)),
        ("left_collar", "spine3", v(0.08, 0.11, -0.01)),
        ("right_collar", "spine3", v(-0.08, 0.11, -0.01)),
        ("head", "neck", v(0.0, 0.09, 0.05)),
        ("left_shoulder", "left_collar", v(0.12, 0.04, 0.0)),
        ("right_shoulder", "right_collar", v(-0.12, 0.04, 0.0)),
        ("left_elbow", "left_shoulder", v(0.25, 0.0, 0.0)),
        ("right_elbow", "right_shoulder", v(-0.25, 0.0, 0.0)),
        ("left_wrist", "left_elbow", v(0.25, 0.0, 0.0)),
        ("right_wrist", "right_elbow", v(-0.25, 0.0, 0.0)),
        ("left_hand", "left_wrist", v(0.08, 0.0, 0.0)),
        ("right_hand", "right_wrist", v(-0.08, 0.0, 0.0)),
    ];
    let mut joints = vec![Joint::root("pelvis")];
    joints.extend(bones.iter().map(|(n, p, o)| Joint::spherical(*n, *p, *o)));
    Skeleton::new("human24", joints, Vec::new()).expect("human24 preset is valid")
}

struct Chain<'a> {
    joints: Vec<Joint>,
    side: &'a str,
    mirror: f64,
}

impl Chain<'_> {
    fn revolute(&mut self, name: &str, parent: &str, offset: Vector3<f64>, axis: Vector3<f64>, lo: f64, hi: f64) {
        let (name, parent) = (self.sided(name), self.sided(parent));
        let offset = v(offset.x * self.mirror, offset.y, offset.z);
        // mirror the limits of roll and yaw axes so both sides bend the same way
        let (lo, hi) = if self.mirror < 0.0 && axis.x == 0.0 { (-hi, -lo) } else { (lo, hi) };
        self.joints.push(Joint::revolute(name, parent, offset, axis).with_limits(vec![Limit::new(lo, hi)]));
    }

    fn sided(&self, name: &str) -> String {
        name.replace("{s}", self.side)
    }
}

fn side_markers(side: &str, mirror: f64, ankle: &str, elbow: &str, shoulder: &str, hip: &str, knee: &str) -> Vec<Marker> {
    let m = |name: &str, joint: &str, o: Vector3<f64>| Marker {
        name: format!("{side}_{name}"),
        joint: format!("{side}_{joint}"),
        offset: v(o.x * mirror, o.y, o.z),
    };
    vec![
        m("hip", hip, Vector3::zeros()),
        m("knee", knee, Vector3::zeros()),
        m("ankle", ankle, Vector3::zeros()),
        m("foot", ankle, v(0.0, -0.06, 0.13)),
        m("shoulder", shoulder, Vector3::zeros()),
        m("elbow", elbow, Vector3::zeros()),
        m("wrist", elbow, v(0.26, 0.0, 0.0)),
        m("hand", elbow, v(0.33, 0.0, 0.0)),
    ]
}

/// 19-DoF humanoid: 5 per leg (hip yaw, roll, pitch, knee, ankle), torso yaw,
/// 4 per arm (shoulder pitch, roll, yaw, elbow).
pub fn h1_like() -> Skeleton {
    let mut joints = vec![Joint::root("pelvis")];
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        let mut c = Chain { joints: Vec::new(), side, mirror };
        c.revolute("{s}_hip_yaw", "pelvis", v(0.088, -0.10, 0.0), Vector3::y(), -0.43, 0.43);
        c.revolute("{s}_hip_roll", "{s}_hip_yaw", Vector3::zeros(), Vector3::z(), -0.43, 0.43);
        c.revolute("{s}_hip_pitch", "{s}_hip_roll", Vector3::zeros(), Vector3::x(), -1.57, 1.57);
        c.revolute("{s}_knee", "{s}_hip_pitch", v(0.0, -0.40, 0.0), Vector3::x(), -0.26, 2.05);
        c.revolute("{s}_ankle", "{s}_knee", v(0.0, -0.40, 0.0), Vector3::x(), -0.87, 0.52);
        joints.extend(c.joints);
    }
    joints.push(Joint::revolute("torso", "pelvis", Vector3::zeros(), Vector3::y()).with_limits(vec![Limit::new(-2.35, 2.35)]));
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        let mut c = Chain { joints: Vec::new(), side, mirror };
        c.revolute("{s}_shoulder_pitch", "torso", v(0.15, 0.45, 0.0), Vector3::x(), -2.87, 2.87);
        c.revolute("{s}_shoulder_roll", "{s}_shoulder_pitch", Vector3::zeros(), Vector3::z(), -1.34, 3.11);
        c.revolute("{s}_shoulder_yaw", "{s}_shoulder_roll", Vector3::zeros(), Vector3::y(), -4.45, 1.3);
        c.revolute("{s}_elbow", "{s}_shoulder_yaw", v(0.28, 0.0, 0.0), Vector3::y(), -1.25, 2.61);
        joints.extend(c.joints);
    }
    let mut markers = vec![Marker { name: "head".into(), joint: "torso".into(), offset: v(0.0, 0.65, 0.0) }];
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        markers.extend(side_markers(side, mirror, "ankle", "elbow", "shoulder_yaw", "hip_pitch", "knee"));
    }
    Skeleton::new("h1_like", joints, markers).expect("h1_like preset is valid")
}

/// 21-DoF humanoid: 6 per leg (hip pitch, roll, yaw, knee, ankle pitch, roll),
/// waist yaw, 4 per arm (shoulder pitch, roll, yaw, elbow).
pub fn g1_like() -> Skeleton {
    let mut joints = vec![Joint::root("pelvis")];
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        let mut c = Chain { joints: Vec::new(), side, mirror };
        c.revolute("{s}_hip_pitch", "pelvis", v(0.064, -0.10, 0.0), Vector3::x(), -2.53, 2.88);
        c.revolute("{s}_hip_roll", "{s}_hip_pitch", Vector3::zeros(), Vector3::z(), -0.52, 2.97);
        c.revolute("{s}_hip_yaw", "{s}_hip_roll", Vector3::zeros(), Vector3::y(), -2.76, 2.76);
        c.revolute("{s}_knee", "{s}_hip_yaw", v(0.0, -0.30, 0.0), Vector3::x(), -0.09, 2.88);
        c.revolute("{s}_ankle_pitch", "{s}_knee", v(0.0, -0.30, 0.0), Vector3::x(), -0.87, 0.52);
        c.revolute("{s}_ankle_roll", "{s}_ankle_pitch", Vector3::zeros(), Vector3::z(), -0.26, 0.26);
        joints.extend(c.joints);
    }
    joints.push(
        Joint::revolute("waist_yaw", "pelvis", Vector3::zeros(), Vector3::y()).with_limits(vec![Limit::new(-2.62, 2.62)]),
    );
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        let mut c = Chain { joints: Vec::new(), side, mirror };
        c.revolute("{s}_shoulder_pitch", "waist_yaw", v(0.10, 0.35, 0.0), Vector3::x(), -3.09, 2.67);
        c.revolute("{s}_shoulder_roll", "{s}_shoulder_pitch", Vector3::zeros(), Vector3::z(), -1.59, 2.25);
        c.revolute("{s}_shoulder_yaw", "{s}_shoulder_roll", Vector3::zeros(), Vector3::y(), -2.62, 2.62);
        c.revolute("{s}_elbow", "{s}_shoulder_yaw", v(0.20, 0.0, 0.0), Vector3::y(), -1.05, 2.09);
        joints.extend(c.joints);
    }
    let mut markers = vec![Marker { name: "head".into(), joint: "waist_yaw".into(), offset: v(0.0, 0.50, 0.0) }];
    for (side, mirror) in [("left", 1.0), ("right", -1.0)] {
        markers.extend(side_markers(side, mirror, "ankle_roll", "elbow", "shoulder_yaw", "hip_yaw", "knee"));
    }
    // the G1 forearm is shorter than the H1's
    for m in markers.iter_mut().filter(|m| m.name.ends_with("_wrist") || m.name.ends_with("_hand")) {
        m.offset *= 0.8;
    }
    Skeleton::new("g1_like", joints, markers).expect("g1_like preset is valid")
}

/// Human→robot pairs for the built-in robots: pelvis, head and the side
/// landmarks by position, with the orientation term on the root and wrists.
/// The scale is the robot-to-human leg length ratio.
pub fn humanoid_correspondence(human: &Skeleton, robot: &Skeleton) -> CorrespondenceSet {
    let mut pairs = vec![
        CorrespondencePair::new("pelvis", "pelvis", 1.0, DEFAULT_ORIENTATION_WEIGHT),
        CorrespondencePair::new("head", "head", 1.0, 0.0),
    ];
    for side in ["left", "right"] {
        for part in ["hip", "knee", "ankle", "foot", "shoulder", "elbow", "wrist", "hand"] {
            let name = format!("{side}_{part}");
            let w = if part == "wrist" { DEFAULT_ORIENTATION_WEIGHT } else { 0.0 };
            pairs.push(CorrespondencePair::new(name.clone(), name, 1.0, w));
        }
    }
    let human_leg = ("left_hip", "left_ankle");
    let robot_leg = robot_leg(robot);
    let scale = leg_length_scale(human, human_leg, robot, robot_leg).unwrap_or(1.0);
    CorrespondenceSet { pairs, fingertips: Vec::new(), scale }
}

fn robot_leg(robot: &Skeleton) -> (&'static str, &'static str) {
    if robot.joint_index("left_hip_yaw").is_some() && robot.joint_index("left_ankle").is_some() {
        ("left_hip_yaw", "left_ankle")
    } else {
        ("left_hip_pitch", "left_ankle_pitch")
    }
}

/// A deterministic walk cycle on [`human24`]: the root advances along +Z at
/// 1 m/s with a slight bob and yaw sway, legs and arms swing, and leaf joints
/// stay at zero. Each single-child joint's rotation vector is projected off
/// its bone direction, so the poses carry no twist.
pub fn human24_walk(frames: usize, fps: f64) -> Vec<Pose> {
    let skel = human24();
    let twist_free = |name: &str, r: Vector3<f64>| -> (usize, Vector3<f64>) {
        let j = skel.joint_index(name).expect("joint exists");
        let r = match skel.children(j) {
            [child] => {
                let u = skel.joints()[*child].rest_offset.normalize();
                r - u * u.dot(&r)
            }
            _ => r,
        };
        (skel.dof_start(j), r)
    };
    (0..frames)
        .map(|t| {
            let time = t as f64 / fps;
            let ph = std::f64::consts::TAU * time;
            let (s, c) = ph.sin_cos();
            let mut pose = Pose::zero(&skel);
            pose.root_position = v(0.0, 0.93 + 0.02 * (2.0 * ph).cos(), time);
            pose.root_orientation = Rotation::from_axis_angle(&Vector3::y(), 0.1 * s);
            let q = &mut pose.joint_values;
            let mut set = |name: &str, r: Vector3<f64>| {
                let (i, r) = twist_free(name, r);
                q[i..i + 3].copy_from_slice(r.as_slice());
            };
            set("left_hip", v(-0.5 * s, 0.0, 0.05));
            set("right_hip", v(0.5 * s, 0.0, -0.05));
            set("left_knee", v(0.6 * (1.0 - c).max(0.0) * 0.5, 0.0, 0.0));
            set("right_knee", v(0.6 * (1.0 + c).max(0.0) * 0.5, 0.0, 0.0));
            set("left_ankle", v(0.15 * c, 0.0, 0.0));
            set("right_ankle", v(-0.15 * c, 0.0, 0.0));
            set("spine1", v(0.05, 0.0, 0.03 * s));
            set("spine2", v(0.03 * c, 0.0, 0.0));
            set("neck", v(-0.05, 0.0, 0.02 * c));
            set("left_collar", v(0.0, 0.05 * s, 0.0));
            set("right_collar", v(0.0, 0.05 * s, 0.0));
            set("left_shoulder", v(0.0, 0.4 * s, -1.2));
            set("right_shoulder", v(0.0, 0.4 * s, 1.2));
            set("left_elbow", v(0.0, -0.3 - 0.2 * c, 0.0));
            set("right_elbow", v(0.0, 0.3 + 0.2 * c, 0.0));
            set("left_wrist", v(0.0, 0.1 * s, 0.0));
            set("right_wrist", v(0.0, -0.1 * s, 0.0));
            pose
        })
        .collect()
}
