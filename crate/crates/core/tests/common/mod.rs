#![allow(dead_code)]

pub mod oracle;

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use retarget_kit::rotations::{Quaternion, Rotation};
use retarget_kit::skeleton::{Joint, Pose, Skeleton};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniform on SO(3): a normalized Gaussian 4-vector is uniform on the unit quaternion sphere.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
    let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
    Rotation::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3])).unwrap()
}

/// Random tree: the root has three children, later joints hang off a random
/// earlier non-root joint. Offsets are 0.1 to 0.5 m long.
pub fn random_tree(rng: &mut ChaCha8Rng, joints: usize) -> Skeleton {
    assert!(joints >= 4);
    let mut list = vec![Joint::root("j0")];
    for i in 1..joints {
        let parent = if i <= 3 { 0 } else { rng.random_range(1..i) };
        let offset = gaussian3(rng).normalize() * rng.random_range(0.1..0.5);
        list.push(Joint::spherical(format!("j{i}"), format!("j{parent}"), offset));
    }
    Skeleton::new("random", list, vec![]).unwrap()
}

/// Pose with no twist about any single-child bone: single-child joints swing
/// about an axis perpendicular to their bone, multi-child joints and the root
/// rotate freely, leaves stay at zero since nothing observes them.
pub fn twist_free_pose(rng: &mut ChaCha8Rng, skel: &Skeleton) -> Pose {
    let mut pose = Pose::zero(skel);
    pose.root_position = gaussian3(rng);
    pose.root_orientation = random_rotation(rng);
    for j in 1..skel.joint_count() {
        let s = skel.dof_start(j);
        let v = match skel.children(j) {
            [] => Vector3::zeros(),
            [c] => {
                let bone = skel.joints()[*c].rest_offset.normalize();
                let g = gaussian3(rng);
                (g - bone * bone.dot(&g)).normalize() * rng.random_range(-2.5..2.5)
            }
            _ => gaussian3(rng).normalize() * rng.random_range(0.0..2.5),
        };
        pose.joint_values[s..s + 3].copy_from_slice(v.as_slice());
    }
    pose
}

/// Joint world positions and rotations by direct recursion, using nalgebra's
/// rotation types rather than the crate's.
pub fn naive_fk(skel: &Skeleton, pose: &Pose) -> Vec<(Vector3<f64>, Rotation3<f64>)> {
    fn local(skel: &Skeleton, pose: &Pose, j: usize) -> Rotation3<f64> {
        use retarget_kit::skeleton::Dof;
        let s = skel.dof_start(j);
        let v = &pose.joint_values;
        match &skel.joints()[j].dof {
            Dof::Fixed => Rotation3::identity(),
            Dof::Revolute { axis } => Rotation3::from_axis_angle(&Unit::new_normalize(*axis), v[s]),
            Dof::Spherical => Rotation3::from_scaled_axis(Vector3::new(v[s], v[s + 1], v[s + 2])),
        }
    }
    fn world(skel: &Skeleton, pose: &Pose, j: usize) -> (Vector3<f64>, Rotation3<f64>) {
        match skel.parent(j) {
            None => (pose.root_position, Rotation3::from_matrix_unchecked(*pose.root_orientation.matrix())),
            Some(p) => {
                let (pp, pr) = world(skel, pose, p);
                (pp + pr * skel.joints()[j].rest_offset, pr * local(skel, pose, j))
            }
        }
    }
    (0..skel.joint_count()).map(|j| world(skel, pose, j)).collect()
}
