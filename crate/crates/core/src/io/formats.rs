use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{document_string, parse_document, read_text, write_atomic, IoError, Kind, FORMAT_VERSION};
use crate::dofs::{DofConfig, DofEntry};
use crate::motion::{JointTrajectory, KeypointMotion};
use crate::retarget::{
    leg_length_scale, CorrespondencePair, CorrespondenceSet, FingertipPair, RegularizerWeights, RetargetOptions,
};
use crate::rotations::Rotation;
use crate::skeleton::{Dof, Joint, Limit, Marker, Pose, Skeleton};
use crate::solver::SolverSettings;
use crate::vq::{Codebook, TokenSequence};

/// A value stored in one of the document formats.
pub trait Document: Sized {
    const KIND: Kind;

    fn to_text(&self) -> Result<String, IoError>;
    fn from_text(path: &Path, text: &str) -> Result<Self, IoError>;

    fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_text(path, &read_text(path)?)
    }

    fn save(&self, path: &Path) -> Result<(), IoError> {
        write_atomic(path, self.to_text()?.as_bytes())
    }
}

fn v3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(path: &Path, at: &str, rows: &[Vec<f64>], cols: Option<usize>) -> Result<DMatrix<f64>, IoError> {
    let c = cols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != c) {
        return Err(IoError::parse(path, format!("{at}[{i}]"), format!("row has {} values, expected {c}", r.len())));
    }
    Ok(DMatrix::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

// ---------------------------------------------------------------- skeleton

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum DofKind {
    Fixed,
    Revolute,
    Spherical,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    offset: [f64; 3],
    dof: DofKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    axis: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    limits: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerDoc {
    name: String,
    joint: String,
    offset: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SkeletonDoc {
    format: String,
    version: u32,
    name: String,
    joints: Vec<JointDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    markers: Vec<MarkerDoc>,
}

impl Document for Skeleton {
    const KIND: Kind = Kind::Skeleton;

    fn to_text(&self) -> Result<String, IoError> {
        let joints = self
            .joints()
            .iter()
            .map(|j| {
                let (dof, axis) = match &j.dof {
                    Dof::Fixed => (DofKind::Fixed, None),
                    Dof::Revolute { axis } => (DofKind::Revolute, Some(v3(axis))),
                    Dof::Spherical => (DofKind::Spherical, None),
                };
                JointDoc {
                    name: j.name.clone(),
                    parent: j.parent.clone(),
                    offset: v3(&j.rest_offset),
                    dof,
                    axis,
                    limits: j.limits.iter().map(|l| [l.min, l.max]).collect(),
                }
            })
            .collect();
        let markers = self
            .markers()
            .iter()
            .map(|m| MarkerDoc { name: m.name.clone(), joint: m.joint.clone(), offset: v3(&m.offset) })
            .collect();
        document_string(&SkeletonDoc { format: Self::KIND.tag().into(), version: FORMAT_VERSION, name: self.name().into(), joints, markers })
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: SkeletonDoc = parse_document(path, text, Self::KIND)?;
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, j) in doc.joints.into_iter().enumerate() {
            let dof = match (j.dof, j.axis) {
                (DofKind::Revolute, Some(a)) => Dof::Revolute { axis: Vector3::from(a) },
                (DofKind::Revolute, None) => {
                    return Err(IoError::parse(path, format!("joints[{i}]"), "revolute joint needs an `axis`"))
                }
                (_, Some(_)) => {
                    return Err(IoError::parse(path, format!("joints[{i}].axis"), "only revolute joints take an axis"))
                }
                (DofKind::Fixed, None) => Dof::Fixed,
                (DofKind::Spherical, None) => Dof::Spherical,
            };
            joints.push(Joint {
                name: j.name,
                parent: j.parent,
                rest_offset: Vector3::from(j.offset),
                dof,
                limits: j.limits.iter().map(|l| Limit::new(l[0], l[1])).collect(),
            });
        }
        let markers = doc
            .markers
            .into_iter()
            .map(|m| Marker { name: m.name, joint: m.joint, offset: Vector3::from(m.offset) })
            .collect();
        Skeleton::new(doc.name, joints, markers).map_err(|e| IoError::parse(path, "joints", e))
    }
}

// ---------------------------------------------------------------- motion

#[derive(Serialize, Deserialize, Clone, Copy, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
pub enum MotionKind {
    Keypoints,
    Trajectory,
}

#[derive(Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct Units {
    length: String,
    angle: String,
}

impl Units {
    fn standard() -> Self {
        Self { length: "m".into(), angle: "rad".into() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionDoc {
    format: String,
    version: u32,
    kind: MotionKind,
    fps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    skeleton: Option<String>,
    units: Units,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keypoints: Option<Vec<Vec<[f64; 3]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_positions: Option<Vec<[f64; 3]>>,
    /// Row-major 3×3 rotation matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root_rotations: Option<Vec<[f64; 9]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    joint_values: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    com_heights: Option<Vec<f64>>,
}

/// Contents of a motion file: labelled keypoints or a joint trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionFile {
    Keypoints { skeleton: Option<String>, motion: KeypointMotion },
    Trajectory(JointTrajectory),
}

impl MotionFile {
    pub fn kind(&self) -> MotionKind {
        match self {
            MotionFile::Keypoints { .. } => MotionKind::Keypoints,
            MotionFile::Trajectory(_) => MotionKind::Trajectory,
        }
    }

    pub fn fps(&self) -> f64 {
        match self {
            MotionFile::Keypoints { motion, .. } => motion.fps,
            MotionFile::Trajectory(t) => t.fps,
        }
    }

    pub fn into_trajectory(self) -> Option<JointTrajectory> {
        match self {
            MotionFile::Trajectory(t) => Some(t),
            MotionFile::Keypoints { .. } => None,
        }
    }

    pub fn into_keypoints(self) -> Option<KeypointMotion> {
        match self {
            MotionFile::Keypoints { motion, .. } => Some(motion),
            MotionFile::Trajectory(_) => None,
        }
    }
}

fn rotation_row_major(r: &Rotation) -> [f64; 9] {
    let m = r.matrix();
    [m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(1, 0)], m[(1, 1)], m[(1, 2)], m[(2, 0)], m[(2, 1)], m[(2, 2)]]
}

impl Document for MotionFile {
    const KIND: Kind = Kind::Motion;

    fn to_text(&self) -> Result<String, IoError> {
        let mut doc = MotionDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            kind: self.kind(),
            fps: self.fps(),
            skeleton: None,
            units: Units::standard(),
            labels: Vec::new(),
            keypoints: None,
            root_positions: None,
            root_rotations: None,
            joint_values: None,
            com_heights: None,
        };
        match self {
            MotionFile::Keypoints { skeleton, motion } => {
                doc.skeleton = skeleton.clone();
                doc.labels = motion.labels.clone();
                doc.keypoints = Some(motion.frames.iter().map(|f| f.iter().map(v3).collect()).collect());
            }
            MotionFile::Trajectory(t) => {
                doc.skeleton = Some(t.skeleton.clone());
                doc.labels = t.dof_labels.clone();
                doc.root_positions = Some(t.frames.iter().map(|p| v3(&p.root_position)).collect());
                doc.root_rotations = Some(t.frames.iter().map(|p| rotation_row_major(&p.root_orientation)).collect());
                doc.joint_values = Some(t.frames.iter().map(|p| p.joint_values.clone()).collect());
                doc.com_heights = t.com_heights.clone();
            }
        }
        document_string(&doc)
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: MotionDoc = parse_document(path, text, Self::KIND)?;
        if !(doc.fps.is_finite() && doc.fps > 0.0) {
            return Err(IoError::parse(path, "fps", format!("fps must be positive, got {}", doc.fps)));
        }
        if doc.units != Units::standard() {
            return Err(IoError::parse(path, "units", "only meters and radians are supported"));
        }
        match doc.kind {
            MotionKind::Keypoints => {
                if doc.root_positions.is_some() || doc.root_rotations.is_some() || doc.joint_values.is_some() {
                    return Err(IoError::parse(path, "kind", "keypoint motions carry only `keypoints`"));
                }
                let frames = doc.keypoints.ok_or_else(|| IoError::parse(path, "keypoints", "missing `keypoints`"))?;
                for (t, f) in frames.iter().enumerate() {
                    if f.len() != doc.labels.len() {
                        return Err(IoError::parse(
                            path,
                            format!("keypoints[{t}]"),
                            format!("frame has {} points for {} labels", f.len(), doc.labels.len()),
                        ));
                    }
                }
                let frames = frames.into_iter().map(|f| f.into_iter().map(Vector3::from).collect()).collect();
                Ok(MotionFile::Keypoints {
                    skeleton: doc.skeleton,
                    motion: KeypointMotion { fps: doc.fps, labels: doc.labels, frames },
                })
            }
            MotionKind::Trajectory => {
                if doc.keypoints.is_some() {
                    return Err(IoError::parse(path, "kind", "trajectories do not carry `keypoints`"));
                }
                let missing = |k: &str| IoError::parse(path, k, format!("missing `{k}`"));
                let pos = doc.root_positions.ok_or_else(|| missing("root_positions"))?;
                let rot = doc.root_rotations.ok_or_else(|| missing("root_rotations"))?;
                let q = doc.joint_values.ok_or_else(|| missing("joint_values"))?;
                let t = q.len();
                if pos.len() != t || rot.len() != t {
                    return Err(IoError::parse(
                        path,
                        "root_positions",
                        format!("{} positions and {} rotations for {t} frames", pos.len(), rot.len()),
                    ));
                }
                if let Some(h) = &doc.com_heights {
                    if h.len() != t {
                        return Err(IoError::parse(path, "com_heights", format!("{} heights for {t} frames", h.len())));
                    }
                }
                let mut frames = Vec::with_capacity(t);
                for i in 0..t {
                    if q[i].len() != doc.labels.len() {
                        return Err(IoError::parse(
                            path,
                            format!("joint_values[{i}]"),
                            format!("{} values for {} labels", q[i].len(), doc.labels.len()),
                        ));
                    }
                    let m = Matrix3::from_row_slice(&rot[i]);
                    let root_orientation =
                        Rotation::from_matrix(m).map_err(|e| IoError::parse(path, format!("root_rotations[{i}]"), e))?;
                    frames.push(Pose { root_position: Vector3::from(pos[i]), root_orientation, joint_values: q[i].clone() });
                }
                Ok(MotionFile::Trajectory(JointTrajectory {
                    fps: doc.fps,
                    skeleton: doc.skeleton.unwrap_or_default(),
                    dof_labels: doc.labels,
                    frames,
                    com_heights: doc.com_heights,
                }))
            }
        }
    }
}

// ---------------------------------------------------------------- correspondence

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LegRatio {
    pub human: [String; 2],
    pub robot: [String; 2],
}

/// The human→robot scale: a fixed number or the ratio of two leg chains.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
pub enum ScaleSpec {
    Fixed(f64),
    LegRatio { leg_ratio: LegRatio },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    human: String,
    robot: String,
    position_weight: f64,
    orientation_weight: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct FingertipDoc {
    human: String,
    robot: String,
    weight: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
struct OptionsDoc {
    joint_limit: Option<f64>,
    limit_margin: Option<f64>,
    smoothness: Option<f64>,
    reference_posture: Option<f64>,
    max_iterations: Option<usize>,
    gradient_tolerance: Option<f64>,
    fd_step: Option<f64>,
    initial_damping: Option<f64>,
    warm_start: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference_pose: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorrespondenceDoc {
    format: String,
    version: u32,
    scale: ScaleSpec,
    pairs: Vec<PairDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    fingertips: Vec<FingertipDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    options: Option<OptionsDoc>,
}

/// A correspondence map as stored on disk, before the scale is resolved
/// against concrete skeletons.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrespondenceFile {
    pub scale: ScaleSpec,
    pub pairs: Vec<CorrespondencePair>,
    pub fingertips: Vec<FingertipPair>,
    pub options: Option<RetargetOptions>,
}

impl CorrespondenceFile {
    pub fn from_set(set: &CorrespondenceSet, options: Option<RetargetOptions>) -> Self {
        Self { scale: ScaleSpec::Fixed(set.scale), pairs: set.pairs.clone(), fingertips: set.fingertips.clone(), options }
    }

    pub fn resolve(&self, human: &Skeleton, robot: &Skeleton) -> Result<CorrespondenceSet, crate::skeleton::SkeletonError> {
        let scale = match &self.scale {
            ScaleSpec::Fixed(s) => *s,
            ScaleSpec::LegRatio { leg_ratio: l } => {
                leg_length_scale(human, (&l.human[0], &l.human[1]), robot, (&l.robot[0], &l.robot[1]))?
            }
        };
        Ok(CorrespondenceSet { pairs: self.pairs.clone(), fingertips: self.fingertips.clone(), scale })
    }
}

impl Document for CorrespondenceFile {
    const KIND: Kind = Kind::Correspondence;

    fn to_text(&self) -> Result<String, IoError> {
        let options = self.options.as_ref().map(|o| OptionsDoc {
            joint_limit: Some(o.regularizers.joint_limit),
            limit_margin: Some(o.regularizers.limit_margin),
            smoothness: Some(o.regularizers.smoothness),
            reference_posture: Some(o.regularizers.reference_posture),
            max_iterations: Some(o.solver.max_iterations),
            gradient_tolerance: Some(o.solver.gradient_tolerance),
            fd_step: Some(o.solver.fd_step),
            initial_damping: Some(o.solver.initial_damping),
            warm_start: Some(o.warm_start),
            reference_pose: o.reference_pose.clone(),
        });
        document_string(&CorrespondenceDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            scale: self.scale.clone(),
            pairs: self
                .pairs
                .iter()
                .map(|p| PairDoc {
                    human: p.human.clone(),
                    robot: p.robot.clone(),
                    position_weight: p.position_weight,
                    orientation_weight: p.orientation_weight,
                })
                .collect(),
            fingertips: self
                .fingertips
                .iter()
                .map(|f| FingertipDoc { human: f.human.clone(), robot: f.robot.clone(), weight: f.weight })
                .collect(),
            options,
        })
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: CorrespondenceDoc = parse_document(path, text, Self::KIND)?;
        let options = doc.options.map(|o| {
            let d = RetargetOptions::default();
            let (r, s) = (RegularizerWeights::default(), SolverSettings::default());
            RetargetOptions {
                regularizers: RegularizerWeights {
                    joint_limit: o.joint_limit.unwrap_or(r.joint_limit),
                    limit_margin: o.limit_margin.unwrap_or(r.limit_margin),
                    smoothness: o.smoothness.unwrap_or(r.smoothness),
                    reference_posture: o.reference_posture.unwrap_or(r.reference_posture),
                },
                solver: SolverSettings {
                    max_iterations: o.max_iterations.unwrap_or(s.max_iterations),
                    gradient_tolerance: o.gradient_tolerance.unwrap_or(s.gradient_tolerance),
                    fd_step: o.fd_step.unwrap_or(s.fd_step),
                    initial_damping: o.initial_damping.unwrap_or(s.initial_damping),
                    ..s
                },
                warm_start: o.warm_start.unwrap_or(d.warm_start),
                reference_pose: o.reference_pose,
            }
        });
        if let Some(o) = &options {
            o.validate().map_err(|e| IoError::parse(path, "options", e))?;
        }
        let file = CorrespondenceFile {
            scale: doc.scale,
            pairs: doc
                .pairs
                .into_iter()
                .map(|p| CorrespondencePair::new(p.human, p.robot, p.position_weight, p.orientation_weight))
                .collect(),
            fingertips: doc
                .fingertips
                .into_iter()
                .map(|f| FingertipPair { human: f.human, robot: f.robot, weight: f.weight })
                .collect(),
            options,
        };
        if let ScaleSpec::Fixed(s) = file.scale {
            let set = CorrespondenceSet { pairs: file.pairs.clone(), fingertips: file.fingertips.clone(), scale: s };
            set.validate().map_err(|e| IoError::parse(path, "pairs", e))?;
        }
        Ok(file)
    }
}

// ---------------------------------------------------------------- dof config

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DofEntryDoc {
    name: String,
    scale: f64,
    offset: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    default: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kp: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kd: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DofConfigDoc {
    format: String,
    version: u32,
    joints: Vec<DofEntryDoc>,
}

impl Document for DofConfig {
    const KIND: Kind = Kind::DofConfig;

    fn to_text(&self) -> Result<String, IoError> {
        document_string(&DofConfigDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            joints: self
                .entries()
                .iter()
                .map(|e| DofEntryDoc {
                    name: e.name.clone(),
                    scale: e.scale,
                    offset: e.offset,
                    default: e.default,
                    kp: e.kp,
                    kd: e.kd,
                })
                .collect(),
        })
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: DofConfigDoc = parse_document(path, text, Self::KIND)?;
        DofConfig::new(
            doc.joints
                .into_iter()
                .map(|j| DofEntry { name: j.name, scale: j.scale, offset: j.offset, default: j.default, kp: j.kp, kd: j.kd })
                .collect(),
        )
        .map_err(|e| IoError::parse(path, "joints", e))
    }
}

// ---------------------------------------------------------------- matrix

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SidecarDoc {
    path: String,
    shape: [usize; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    format: String,
    version: u32,
    rows: usize,
    cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sidecar: Option<SidecarDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// A dense `rows × cols` matrix with optional row labels. The values live
/// inline or, when `sidecar` is set, in a flat little-endian f64 file next to
/// the document (row-major, path relative to the document).
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFile {
    pub data: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
    pub sidecar: Option<PathBuf>,
}

impl MatrixFile {
    pub fn new(data: DMatrix<f64>) -> Self {
        Self { data, labels: None, sidecar: None }
    }

    /// Matrix from equal-length rows; `cols` sizes an empty matrix.
    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Self {
        let cols = rows.first().map_or(cols, Vec::len);
        Self::new(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    fn doc(&self) -> MatrixDoc {
        MatrixDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            rows: self.data.nrows(),
            cols: self.data.ncols(),
            data: self.sidecar.is_none().then(|| rows(&self.data)),
            sidecar: self.sidecar.as_ref().map(|p| SidecarDoc {
                path: p.to_string_lossy().into_owned(),
                shape: [self.data.nrows(), self.data.ncols()],
            }),
            labels: self.labels.clone(),
        }
    }

    fn sidecar_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 8);
        for r in 0..self.data.nrows() {
            for c in 0..self.data.ncols() {
                out.extend_from_slice(&self.data[(r, c)].to_le_bytes());
            }
        }
        out
    }
}

fn base_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

impl Document for MatrixFile {
    const KIND: Kind = Kind::Matrix;

    /// The document only; [`Document::save`] also writes the sidecar.
    fn to_text(&self) -> Result<String, IoError> {
        document_string(&self.doc())
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: MatrixDoc = parse_document(path, text, Self::KIND)?;
        let (data, sidecar) = match (doc.data, doc.sidecar) {
            (Some(rows), None) => {
                if rows.len() != doc.rows {
                    return Err(IoError::parse(path, "data", format!("{} rows, header says {}", rows.len(), doc.rows)));
                }
                (matrix_from_rows(path, "data", &rows, Some(doc.cols))?, None)
            }
            (None, Some(s)) => {
                if s.shape != [doc.rows, doc.cols] {
                    return Err(IoError::parse(path, "sidecar.shape", "shape disagrees with rows/cols"));
                }
                let bin = base_dir(path).join(&s.path);
                let bytes = std::fs::read(&bin).map_err(|source| IoError::Io { path: bin.clone(), source })?;
                if bytes.len() != doc.rows * doc.cols * 8 {
                    return Err(IoError::parse(
                        &bin,
                        "size",
                        format!("{} bytes, expected {} for a {}x{} f64 matrix", bytes.len(), doc.rows * doc.cols * 8, doc.rows, doc.cols),
                    ));
                }
                let values: Vec<f64> =
                    bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
                if let Some(i) = values.iter().position(|v| !v.is_finite()) {
                    return Err(IoError::parse(&bin, format!("element {i}"), "non-finite value"));
                }
                (DMatrix::from_row_slice(doc.rows, doc.cols, &values), Some(PathBuf::from(s.path)))
            }
            _ => return Err(IoError::parse(path, "data", "exactly one of `data` and `sidecar` is required")),
        };
        if let Some(l) = &doc.labels {
            if l.len() != doc.rows {
                return Err(IoError::parse(path, "labels", format!("{} labels for {} rows", l.len(), doc.rows)));
            }
        }
        Ok(MatrixFile { data, labels: doc.labels, sidecar })
    }

    fn save(&self, path: &Path) -> Result<(), IoError> {
        if let Some(s) = &self.sidecar {
            if self.data.iter().any(|v| !v.is_finite()) {
                return Err(IoError::parse(path, "data", "non-finite value"));
            }
            write_atomic(&base_dir(path).join(s), &self.sidecar_bytes())?;
        }
        write_atomic(path, self.to_text()?.as_bytes())
    }
}

// ---------------------------------------------------------------- codebook

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CodebookDoc {
    format: String,
    version: u32,
    decay: f64,
    epsilon: f64,
    entries: Vec<Vec<f64>>,
    ema_counts: Vec<f64>,
    ema_sums: Vec<Vec<f64>>,
    usage: Vec<f64>,
}

impl Document for Codebook {
    const KIND: Kind = Kind::Codebook;

    fn to_text(&self) -> Result<String, IoError> {
        document_string(&CodebookDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            decay: self.decay(),
            epsilon: self.epsilon(),
            entries: rows(self.entries()),
            ema_counts: self.ema_counts().to_vec(),
            ema_sums: rows(self.ema_sums()),
            usage: self.usage().to_vec(),
        })
    }

    /// Accepts a codebook document, or a plain matrix document whose rows
    /// become a fresh codebook.
    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let is_matrix = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("format").and_then(|f| f.as_str()).map(|f| f == Kind::Matrix.tag()))
            .unwrap_or(false);
        if is_matrix {
            let m = MatrixFile::from_text(path, text)?;
            return Codebook::new(m.data).map_err(|e| IoError::parse(path, "data", e));
        }
        let doc: CodebookDoc = parse_document(path, text, Self::KIND)?;
        let entries = matrix_from_rows(path, "entries", &doc.entries, None)?;
        let sums = matrix_from_rows(path, "ema_sums", &doc.ema_sums, Some(entries.ncols()))?;
        Codebook::from_state(entries, doc.ema_counts, sums, doc.decay, doc.epsilon, doc.usage)
            .map_err(|e| IoError::parse(path, "entries", e))
    }
}

// ---------------------------------------------------------------- tokens

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokensDoc {
    format: String,
    version: u32,
    codebook_size: usize,
    indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    downsample: Option<usize>,
}

impl Document for TokenSequence {
    const KIND: Kind = Kind::Tokens;

    fn to_text(&self) -> Result<String, IoError> {
        document_string(&TokensDoc {
            format: Self::KIND.tag().into(),
            version: FORMAT_VERSION,
            codebook_size: self.codebook_size,
            indices: self.indices.clone(),
            frames: self.frames,
            downsample: self.downsample,
        })
    }

    fn from_text(path: &Path, text: &str) -> Result<Self, IoError> {
        let doc: TokensDoc = parse_document(path, text, Self::KIND)?;
        let tokens = TokenSequence {
            indices: doc.indices,
            codebook_size: doc.codebook_size,
            frames: doc.frames,
            downsample: doc.downsample,
        };
        if let Some(i) = tokens.indices.iter().position(|&k| k >= tokens.codebook_size) {
            return Err(IoError::parse(
                path,
                format!("indices[{i}]"),
                format!("token {} out of range for codebook size {}", tokens.indices[i], tokens.codebook_size),
            ));
        }
        Ok(tokens)
    }
}

/// Reads only the `format` tag of a document.
pub fn peek_kind(path: &Path) -> Result<Option<String>, IoError> {
    #[derive(Deserialize)]
    struct Tag {
        format: Option<String>,
    }
    let tag: Tag = load_document_untyped(path)?;
    Ok(tag.format)
}

fn load_document_untyped<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::parse(path, format!("line {} column {}", e.line(), e.column()), e))
}
