mod common;

use std::path::Path;

use nalgebra::{DMatrix, Vector3};
use proptest::prelude::*;

use common::{random_rotation, rng};
use retarget_kit::dofs::{DofConfig, DofEntry};
use retarget_kit::io::*;
use retarget_kit::motion::JointTrajectory;
use retarget_kit::presets::{g1_like, human24, humanoid_correspondence};
use retarget_kit::retarget::RetargetOptions;
use retarget_kit::skeleton::{Joint, Pose, Skeleton};
use retarget_kit::vq::{Codebook, TokenSequence};
use retarget_kit::{Error, ErrorClass};

const THREE_JOINTS: &str = r#"{
  "format": "retarget-kit/skeleton",
  "version": 1,
  "name": "chain",
  "joints": [
    {
      "name": "root",
      "offset": [0.0, 0.0, 0.0],
      "dof": "fixed"
    },
    {
      "name": "a",
      "parent": "root",
      "offset": [0.0, 1.0, 0.0],
      "dof": "revolute",
      "axis": [0.0, 0.0, 1.0],
      "limits": [
        [-1.5, 1.5]
      ]
    },
    {
      "name": "b",
      "parent": "a",
      "offset": [0.0, 1.0, 0.0],
      "dof": "spherical"
    }
  ]
}
"#;

fn p() -> &'static Path {
    Path::new("test.json")
}

fn parse_error(err: IoError) -> (String, String) {
    match err {
        IoError::Parse { location, reason, .. } => (location, reason),
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn canonical_skeleton_is_byte_identical() {
    let skel = Skeleton::from_text(p(), THREE_JOINTS).unwrap();
    assert_eq!(skel.to_text().unwrap(), THREE_JOINTS);
    let again = Skeleton::from_text(p(), &skel.to_text().unwrap()).unwrap();
    assert_eq!(again, skel);
}

#[test]
fn presets_round_trip() {
    for skel in [human24(), g1_like()] {
        let text = skel.to_text().unwrap();
        assert_eq!(Skeleton::from_text(p(), &text).unwrap(), skel);
    }
    let corr = CorrespondenceFile::from_set(&humanoid_correspondence(&human24(), &g1_like()), Some(RetargetOptions::default()));
    let text = corr.to_text().unwrap();
    let back = CorrespondenceFile::from_text(p(), &text).unwrap();
    assert_eq!(back, corr);
    assert_eq!(back.to_text().unwrap(), text);
}

#[test]
fn cycles_name_both_joints() {
    let text = THREE_JOINTS.replace(r#""parent": "root""#, r#""parent": "b""#);
    let (location, reason) = parse_error(Skeleton::from_text(p(), &text).unwrap_err());
    assert_eq!(location, "joints");
    assert!(reason.contains("cycle") && reason.contains('a') && reason.contains('b'), "{reason}");
}

#[test]
fn unordered_joints_are_rejected() {
    let skel = Skeleton::new(
        "x",
        vec![Joint::root("r"), Joint::spherical("a", "r", Vector3::y()), Joint::spherical("b", "a", Vector3::y())],
        vec![],
    )
    .unwrap();
    let text = skel.to_text().unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut swapped = value.clone();
    swapped["joints"].as_array_mut().unwrap().swap(1, 2);
    let (_, reason) = parse_error(Skeleton::from_text(p(), &swapped.to_string()).unwrap_err());
    assert!(reason.contains("topological"), "{reason}");
}

#[test]
fn errors_carry_positions() {
    let text = THREE_JOINTS.replace(r#""axis": [0.0, 0.0, 1.0]"#, r#""axis": [0.0, "z", 1.0]"#);
    let (location, _) = parse_error(Skeleton::from_text(p(), &text).unwrap_err());
    assert!(location.starts_with("line 16 column"), "{location}");
    assert!(location.contains("joints[1].axis"), "{location}");

    for bad in ["NaN", "1e400", "Infinity"] {
        let text = THREE_JOINTS.replace("[0.0, 1.0, 0.0]", &format!("[0.0, {bad}, 0.0]"));
        let (location, _) = parse_error(Skeleton::from_text(p(), &text).unwrap_err());
        assert!(location.starts_with("line "), "{bad}: {location}");
    }
}

#[test]
fn non_finite_values_are_not_written() {
    let mut data = DMatrix::from_element(2, 2, 1.0);
    data[(1, 0)] = f64::NAN;
    let (location, _) = parse_error(MatrixFile::new(data.clone()).to_text().unwrap_err());
    assert_eq!(location, "data[1][0]");
    data[(1, 0)] = f64::INFINITY;
    assert!(MatrixFile::new(data).to_text().is_err());
}

#[test]
fn schema_version_and_kind() {
    let future = THREE_JOINTS.replace(r#""version": 1"#, r#""version": 2"#);
    assert!(matches!(Skeleton::from_text(p(), &future), Err(IoError::SchemaVersion { .. })));
    let (location, _) = parse_error(DofConfig::from_text(p(), THREE_JOINTS).unwrap_err());
    assert_eq!(location, "format");
    let err: Error = Skeleton::from_text(p(), &future).unwrap_err().into();
    assert_eq!(err.class(), ErrorClass::Validation);
}

#[test]
fn unknown_fields_are_rejected() {
    let text = THREE_JOINTS.replace(r#""name": "chain","#, r#""name": "chain", "colour": "red","#);
    assert!(Skeleton::from_text(p(), &text).is_err());
}

#[test]
fn sidecar_matrix_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("m.json");
    let data = DMatrix::from_fn(7, 5, |i, j| (i as f64 + 0.1) * (j as f64 - 2.3).powi(3) / 7.0);
    let mut m = MatrixFile::new(data);
    m.sidecar = Some("m.bin".into());
    m.labels = Some((0..7).map(|i| format!("row{i}")).collect());
    m.save(&doc).unwrap();
    assert_eq!(std::fs::metadata(dir.path().join("m.bin")).unwrap().len(), 7 * 5 * 8);
    assert_eq!(MatrixFile::load(&doc).unwrap(), m);

    // truncated sidecar
    std::fs::write(dir.path().join("m.bin"), [0u8; 16]).unwrap();
    assert!(MatrixFile::load(&doc).is_err());
}

#[test]
fn tokens_out_of_range_are_rejected() {
    let tokens = TokenSequence { indices: vec![0, 3, 1], codebook_size: 4, frames: Some(12), downsample: Some(4) };
    let text = tokens.to_text().unwrap();
    assert_eq!(TokenSequence::from_text(p(), &text).unwrap(), tokens);
    let (location, _) = parse_error(TokenSequence::from_text(p(), &text.replace("[0, 3, 1]", "[0, 4, 1]")).unwrap_err());
    assert_eq!(location, "indices[1]");
}

#[test]
fn codebook_and_dofconfig_round_trip() {
    let mut cb = Codebook::new(DMatrix::from_fn(4, 3, |i, j| i as f64 - 0.5 * j as f64)).unwrap();
    let z = DMatrix::from_fn(6, 3, |i, j| (i * j) as f64 * 0.3);
    let t = cb.assign(&z).unwrap();
    cb.ema_update(&z, &t).unwrap();
    let text = cb.to_text().unwrap();
    assert_eq!(Codebook::from_text(p(), &text).unwrap(), cb);

    let cfg = DofConfig::new(vec![DofEntry::new("hip").with_scale_offset(2.0, 0.1), DofEntry::new("knee").with_default(0.3)]).unwrap();
    let text = cfg.to_text().unwrap();
    assert_eq!(DofConfig::from_text(p(), &text).unwrap(), cfg);
}

#[test]
fn saves_are_atomic_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    human24().save(&path).unwrap();
    let first = std::fs::read(&path).unwrap();
    human24().save(&path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), first);
    // only the target remains; the temporary file was renamed into place
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    assert_eq!(peek_kind(&path).unwrap().as_deref(), Some("retarget-kit/skeleton"));
}

fn any_finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -10.0..10.0f64,
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO | prop::num::f64::NEGATIVE
            | prop::num::f64::POSITIVE,
    ]
    .prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn trajectories_round_trip_exactly(
        seed in any::<u64>(),
        values in prop::collection::vec(any_finite(), 69 * 40),
        heights in prop::option::of(prop::collection::vec(any_finite(), 40)),
    ) {
        let skel = human24();
        let mut g = rng(seed);
        let frames: Vec<Pose> = values
            .chunks(69)
            .enumerate()
            .map(|(t, c)| {
                let mut p = Pose::zero(&skel);
                p.root_position = Vector3::new(c[0], c[1] * 1e-3, t as f64 / 7.0);
                p.root_orientation = random_rotation(&mut g);
                p.joint_values.copy_from_slice(c);
                p
            })
            .collect();
        let mut traj = JointTrajectory::new(&skel, 29.97, frames);
        traj.com_heights = heights;
        let motion = MotionFile::Trajectory(traj);
        let text = motion.to_text().unwrap();
        let back = MotionFile::from_text(p(), &text).unwrap();
        prop_assert_eq!(&back, &motion);
        prop_assert_eq!(back.to_text().unwrap(), text);
    }
}
