mod common;

use std::f64::consts::PI;

use nalgebra::{Matrix3xX, Vector3};
use proptest::prelude::*;

use common::{gaussian3, random_rotation, rng};
use retarget_kit::rotations::*;

fn in_so3(r: &Rotation) -> bool {
    r.orthonormality_error() <= 1e-9 && (r.matrix().determinant() - 1.0).abs() <= 1e-9
}

fn close(a: &Rotation, b: &Rotation, tol: f64) -> bool {
    (a.matrix() - b.matrix()).amax() <= tol
}

fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

proptest! {
    #[test]
    fn conversions_round_trip(seed in any::<u64>()) {
        let r = random_rotation(&mut rng(seed));
        let q = r.to_quaternion();
        prop_assert!((q.norm() - 1.0).abs() <= 1e-9);
        prop_assert!(q.w >= 0.0);
        prop_assert!(close(&Rotation::from_quaternion(q).unwrap(), &r, 1e-9));

        let aa = r.to_axis_angle();
        prop_assert!((0.0..=PI).contains(&aa.angle));
        prop_assert!((aa.axis.norm() - 1.0).abs() <= 1e-9);
        prop_assert!(close(&Rotation::from_axis_angle(&aa.axis, aa.angle), &r, 1e-9));

        prop_assert!(close(&Rotation::from_rotation_vector(&r.to_rotation_vector()), &r, 1e-9));
        prop_assert!(close(&Rotation::from_rot6d(&r.to_rot6d()).unwrap(), &r, 1e-9));

        // matrix -> quaternion -> axis-angle -> matrix
        let v = q.to_rotation_vector();
        prop_assert!(close(&Rotation::from_rotation_vector(&v), &r, 1e-9));
    }

    #[test]
    fn rot6d_is_onto_so3(a in prop::array::uniform6(-3.0..3.0f64)) {
        let first = Vector3::new(a[0], a[1], a[2]);
        let second = Vector3::new(a[3], a[4], a[5]);
        prop_assume!(first.norm() > 1e-3 && first.cross(&second).norm() > 1e-3 * second.norm().max(1.0));
        let r = Rotation::from_rot6d(&a).unwrap();
        prop_assert!(in_so3(&r));
        prop_assert!(angle_between(&r.matrix().column(0).into(), &first) <= 1e-9);
    }

    #[test]
    fn geodesic_is_a_metric(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (a, b, c) = (random_rotation(&mut g), random_rotation(&mut g), random_rotation(&mut g));
        let dab = geodesic_distance(&a, &b);
        prop_assert_eq!(dab, geodesic_distance(&b, &a));
        prop_assert!((0.0..=PI).contains(&dab));
        prop_assert!(geodesic_distance(&a, &c) <= dab + geodesic_distance(&b, &c) + 1e-9);
        prop_assert_eq!(geodesic_distance(&a, &a), 0.0);
        // oracle through the quaternion view
        let rel = a.inverse() * b;
        let q = rel.to_quaternion();
        let via_quat = 2.0 * Vector3::new(q.x, q.y, q.z).norm().atan2(q.w.abs());
        prop_assert!((dab - via_quat).abs() <= 1e-9);
    }

    #[test]
    fn rodrigues_is_minimal(seed in any::<u64>()) {
        let mut g = rng(seed);
        let (t, p) = (gaussian3(&mut g), gaussian3(&mut g));
        let r = rodrigues_align(&t, &p).unwrap();
        prop_assert!(in_so3(&r));
        prop_assert!((r * t.normalize() - p.normalize()).amax() <= 1e-9);
        prop_assert!((geodesic_distance(&Rotation::identity(), &r) - angle_between(&t, &p)).abs() <= 1e-9);
    }

    #[test]
    fn procrustes_recovers_exact_rotations(seed in any::<u64>(), m in 2usize..8) {
        let mut g = rng(seed);
        let r0 = random_rotation(&mut g);
        let t = Matrix3xX::from_columns(&(0..m).map(|_| gaussian3(&mut g)).collect::<Vec<_>>());
        let p = r0.matrix() * &t;
        let r = procrustes(&t, &p).unwrap();
        prop_assert!(in_so3(&r));
        prop_assert!(close(&r, &r0, 1e-9));
    }
}

#[test]
fn antiparallel_alignment_is_a_half_turn() {
    for t in [Vector3::x(), Vector3::y(), Vector3::z(), Vector3::new(1.0, 2.0, -3.0)] {
        let r = rodrigues_align(&t, &-t).unwrap();
        assert!(in_so3(&r));
        assert!((r * t.normalize() + t.normalize()).amax() <= 1e-9);
        assert!((r.angle() - PI).abs() <= 1e-9);
    }
}

#[test]
fn procrustes_never_returns_a_reflection() {
    // mirrored point sets: the unconstrained optimum is a reflection
    let t = Matrix3xX::from_columns(&[Vector3::x(), Vector3::y(), Vector3::z()]);
    let p = Matrix3xX::from_columns(&[-Vector3::x(), Vector3::y(), Vector3::z()]);
    let r = procrustes(&t, &p).unwrap();
    assert!(in_so3(&r));
}

#[test]
fn degenerate_inputs() {
    assert!(matches!(rodrigues_align(&Vector3::zeros(), &Vector3::x()), Err(RotationError::DegenerateBone { .. })));
    let t = Matrix3xX::from_columns(&[Vector3::x(), 2.0 * Vector3::x()]);
    assert!(matches!(procrustes(&t, &t), Err(RotationError::RankDeficient { .. })));
    assert!(matches!(Rotation::from_rot6d(&[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]), Err(RotationError::DegenerateFrame(_))));
}
