mod common;

use nalgebra::Vector3;
use proptest::prelude::*;
use rand::RngExt;

use common::{gaussian3, naive_fk, random_rotation, random_tree, rng, twist_free_pose};
use retarget_kit::dofs::{remap_dofs, DofConfig, DofEntry};
use retarget_kit::ik::{reconstruct_frame, reconstruct_sequence, IkOptions};
use retarget_kit::motion::KeypointMotion;
use retarget_kit::rotations::{geodesic_distance, Quaternion, Rotation};
use retarget_kit::skeleton::{Joint, Limit, Pose, Skeleton};

fn keypoints(skel: &Skeleton, pose: &Pose) -> Vec<Vector3<f64>> {
    skel.fk(pose).unwrap().joints.iter().map(|t| t.position).collect()
}

fn reconstruct(skel: &Skeleton, points: Vec<Vector3<f64>>) -> Pose {
    let motion = KeypointMotion {
        fps: 30.0,
        labels: skel.joints().iter().map(|j| j.name.clone()).collect(),
        frames: vec![points],
    };
    reconstruct_frame(skel, &motion.frame(0)).unwrap()
}

fn local(pose: &Pose, s: usize) -> Rotation {
    Rotation::from_rotation_vector(&Vector3::from_column_slice(&pose.joint_values[s..s + 3]))
}

/// Largest per-joint geodesic distance between the local rotations of two poses.
fn max_joint_error(skel: &Skeleton, a: &Pose, b: &Pose) -> f64 {
    (1..skel.joint_count())
        .map(|j| geodesic_distance(&local(a, skel.dof_start(j)), &local(b, skel.dof_start(j))))
        .fold(geodesic_distance(&a.root_orientation, &b.root_orientation), f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_matches_naive_recursion(seed in any::<u64>(), n in 8usize..24) {
        let mut g = rng(seed);
        let skel = random_tree(&mut g, n);
        let mut pose = Pose::zero(&skel);
        pose.root_position = gaussian3(&mut g);
        pose.root_orientation = random_rotation(&mut g);
        pose.joint_values.iter_mut().for_each(|v| *v = g.random_range(-3.0..3.0));
        let fk = skel.fk(&pose).unwrap();
        for (t, (p, r)) in fk.joints.iter().zip(naive_fk(&skel, &pose)) {
            prop_assert!((t.position - p).amax() <= 1e-9);
            prop_assert!((t.rotation.matrix() - r.matrix()).amax() <= 1e-9);
        }
        // rigid offsets keep their length
        for j in 1..n {
            let p = skel.parent(j).unwrap();
            let len = (fk.joints[j].position - fk.joints[p].position).norm();
            prop_assert!((len - skel.joints()[j].rest_offset.norm()).abs() <= 1e-9);
        }
    }

    #[test]
    fn fk_is_equivariant_under_root_rotation(seed in any::<u64>()) {
        let mut g = rng(seed);
        let skel = random_tree(&mut g, 10);
        let pose = twist_free_pose(&mut g, &skel);
        let q = random_rotation(&mut g);
        let mut turned = pose.clone();
        turned.root_orientation = q * pose.root_orientation;
        for (a, b) in keypoints(&skel, &pose).iter().zip(keypoints(&skel, &turned)) {
            let expected = pose.root_position + q * (a - pose.root_position);
            prop_assert!((b - expected).amax() <= 1e-9);
        }
    }

    #[test]
    fn ik_inverts_fk_on_twist_free_poses(seed in any::<u64>(), n in 8usize..24) {
        let mut g = rng(seed);
        let skel = random_tree(&mut g, n);
        let pose = twist_free_pose(&mut g, &skel);
        let points = keypoints(&skel, &pose);
        let back = reconstruct(&skel, points.clone());
        prop_assert!(max_joint_error(&skel, &pose, &back) <= 1e-6);
        prop_assert!((back.root_position - pose.root_position).amax() <= 1e-12);
        for (a, b) in points.iter().zip(keypoints(&skel, &back)) {
            prop_assert!((a - b).amax() <= 1e-6);
        }
    }

    #[test]
    fn ik_is_root_invariant(seed in any::<u64>()) {
        let mut g = rng(seed);
        let skel = random_tree(&mut g, 12);
        let pose = twist_free_pose(&mut g, &skel);
        let points = keypoints(&skel, &pose);
        let base = reconstruct(&skel, points.clone());

        let v = gaussian3(&mut g);
        let moved = reconstruct(&skel, points.iter().map(|p| p + v).collect());
        prop_assert!((moved.root_position - (base.root_position + v)).amax() <= 1e-9);
        prop_assert!(geodesic_distance(&moved.root_orientation, &base.root_orientation) <= 1e-9);
        prop_assert!(max_joint_error(&skel, &moved, &base) <= 1e-9);

        let q = random_rotation(&mut g);
        let root = points[0];
        let turned = reconstruct(&skel, points.iter().map(|p| root + q * (p - root)).collect());
        prop_assert!((turned.root_position - root).amax() <= 1e-12);
        prop_assert!(geodesic_distance(&turned.root_orientation, &(q * base.root_orientation)) <= 1e-9);
        for j in 1..skel.joint_count() {
            let s = skel.dof_start(j);
            prop_assert!(geodesic_distance(&local(&turned, s), &local(&base, s)) <= 1e-9);
        }
    }

    #[test]
    fn ik_matches_directions_when_bone_lengths_differ(seed in any::<u64>()) {
        let mut g = rng(seed);
        let skel = random_tree(&mut g, 12);
        let pose = twist_free_pose(&mut g, &skel);
        let fk = skel.fk(&pose).unwrap();
        // stretch every bone by its own factor, keeping its world direction
        let mut stretched = vec![fk.joints[0].position];
        for j in 1..skel.joint_count() {
            let p = skel.parent(j).unwrap();
            let bone = fk.joints[j].position - fk.joints[p].position;
            stretched.push(stretched[p] + bone * g.random_range(0.5..2.0));
        }
        let back = reconstruct(&skel, stretched.clone());
        let fk_back = skel.fk(&back).unwrap();
        for j in 1..skel.joint_count() {
            let p = skel.parent(j).unwrap();
            let predicted = fk_back.joints[j].position - fk_back.joints[p].position;
            let observed = stretched[j] - stretched[p];
            let angle = predicted.cross(&observed).norm().atan2(predicted.dot(&observed));
            prop_assert!(angle <= 1e-6, "bone {j}: {angle}");
            prop_assert!((predicted.norm() - skel.joints()[j].rest_offset.norm()).abs() <= 1e-9);
        }
    }

    #[test]
    fn check_limits_matches_linear_scan(seed in any::<u64>()) {
        let mut g = rng(seed);
        let mut joints = vec![Joint::root("root")];
        let mut limits = vec![];
        for i in 0..8 {
            let lo = g.random_range(-2.0..0.0);
            let hi = g.random_range(0.0..2.0);
            limits.push((lo, hi));
            let parent = if i == 0 { "root".to_string() } else { format!("r{}", i - 1) };
            joints.push(
                Joint::revolute(format!("r{i}"), parent, Vector3::new(0.0, 0.1, 0.0), Vector3::z())
                    .with_limits(vec![Limit::new(lo, hi)]),
            );
        }
        let skel = Skeleton::new("limits", joints, vec![]).unwrap();
        let mut pose = Pose::zero(&skel);
        pose.joint_values.iter_mut().for_each(|v| *v = g.random_range(-3.0..3.0));
        let found = skel.check_limits(&pose).unwrap();
        let expected: Vec<(usize, f64)> = pose
            .joint_values
            .iter()
            .zip(&limits)
            .enumerate()
            .filter_map(|(i, (&v, &(lo, hi)))| {
                (v > hi).then(|| (i + 1, v - hi)).or_else(|| (v < lo).then(|| (i + 1, v - lo)))
            })
            .collect();
        prop_assert_eq!(found.len(), expected.len());
        for (f, (j, amount)) in found.iter().zip(expected) {
            prop_assert_eq!(f.joint, j);
            prop_assert_eq!(f.amount, amount);
        }
    }

    #[test]
    fn remap_round_trips(values in prop::collection::vec(-3.0..3.0f64, 6), seed in any::<u64>()) {
        let mut g = rng(seed);
        let names = ["a", "b", "c", "d", "e", "f"];
        let src = DofConfig::from_names(&names).unwrap();
        let mut order: Vec<usize> = (0..6).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut g);
        let dst = DofConfig::new(
            order
                .iter()
                .map(|&i| DofEntry::new(names[i]).with_scale_offset(g.random_range(0.5..2.0), g.random_range(-1.0..1.0)))
                .collect(),
        )
        .unwrap();
        let back = remap_dofs(&remap_dofs(&values, &src, &dst).unwrap(), &dst, &src).unwrap();
        for (a, b) in values.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn zero_pose_reconstructs_to_identity() {
    let skel = random_tree(&mut rng(3), 16);
    let back = reconstruct(&skel, keypoints(&skel, &Pose::zero(&skel)));
    assert!(back.joint_values.iter().all(|v| v.abs() <= 1e-12));
    assert!(geodesic_distance(&back.root_orientation, &Rotation::identity()) <= 1e-12);
    assert_eq!(back.root_position, Vector3::zeros());
}

#[test]
fn remap_drops_and_defaults() {
    let src = DofConfig::from_names(&["hip", "knee", "ankle"]).unwrap();
    let dst = DofConfig::new(vec![
        DofEntry::new("knee"),
        DofEntry::new("wrist").with_default(0.25),
        DofEntry::new("hip").with_scale_offset(2.0, 0.5),
    ])
    .unwrap();
    assert_eq!(remap_dofs(&[0.1, 0.2, 0.3], &src, &dst).unwrap(), vec![0.2, 0.25, 0.1 * 2.0 + 0.5]);
}

#[test]
fn sequence_stays_hemisphere_continuous() {
    let skel = Skeleton::new(
        "spin",
        vec![
            Joint::root("root"),
            Joint::spherical("hub", "root", Vector3::new(0.0, 0.2, 0.0)),
            Joint::spherical("a", "hub", Vector3::new(0.3, 0.0, 0.0)),
            Joint::spherical("b", "hub", Vector3::new(0.0, 0.3, 0.1)),
        ],
        vec![],
    )
    .unwrap();
    let axis = Vector3::new(0.3, 1.0, -0.2).normalize();
    let poses: Vec<Pose> = (0..60)
        .map(|t| {
            let mut p = Pose::zero(&skel);
            p.joint_values[0..3].copy_from_slice((axis * (0.15 * t as f64)).as_slice());
            p
        })
        .collect();
    let motion = KeypointMotion::from_poses(&skel, &poses, 30.0).unwrap();

    let continuous = reconstruct_sequence(&skel, &motion, &IkOptions::default()).unwrap();
    let quat = |p: &Pose| Quaternion::from_rotation_vector(&Vector3::from_column_slice(&p.joint_values[0..3]));
    for w in continuous.windows(2) {
        assert!(quat(&w[0]).dot(&quat(&w[1])) >= 0.0);
    }
    // the raw reconstruction does flip once the spin passes π
    let raw = reconstruct_sequence(&skel, &motion, &IkOptions { continuity: false, ..Default::default() }).unwrap();
    assert!(raw.windows(2).any(|w| quat(&w[0]).dot(&quat(&w[1])) < 0.0));
    for (a, b) in raw.iter().zip(&continuous) {
        assert!(max_joint_error(&skel, a, b) <= 1e-9);
    }

    let constant = KeypointMotion { frames: vec![motion.frames[7].clone(); 5], ..motion };
    let poses = reconstruct_sequence(&skel, &constant, &IkOptions::default()).unwrap();
    assert!(poses.windows(2).all(|w| w[0] == w[1]));
}
