use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use retarget_kit::features::{build_pose_features, FeatureLayout, FeatureOptions, DEFAULT_CONTACT_THRESHOLD};
use retarget_kit::ik::{reconstruct_sequence, IkOptions};
use retarget_kit::io::{save_report, CorrespondenceFile, Document, IoError, MatrixFile, MotionFile};
use retarget_kit::metrics::{
    diversity, fid_report, mm_dist, multimodality, r_precision, success_rate, tracking_metrics, FeatureMatrix,
    DEFAULT_SEED,
};
use retarget_kit::motion::{JointTrajectory, KeypointMotion};
use retarget_kit::retarget::{retarget_sequence, RetargetOptions, RetargetReport};
use retarget_kit::skeleton::{Pose, Skeleton};
use retarget_kit::vq::{Codebook, DEFAULT_USAGE_THRESHOLD};
use retarget_kit::{Error, ErrorClass};

const SEED_VAR: &str = "RETARGET_KIT_SEED";

#[derive(Parser)]
#[command(name = "retarget-kit", version, about = "Human-to-humanoid motion retargeting toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Forward kinematics: joint trajectory -> world keypoints.
    Fk(FkArgs),
    /// Inverse kinematics: keypoints -> joint trajectory.
    Ik(IkArgs),
    /// Retarget a human motion onto a robot skeleton.
    Retarget(RetargetArgs),
    /// Tracking and generation metrics.
    #[command(subcommand)]
    Metrics(MetricsCommand),
    /// Codebook assignment and updates.
    #[command(subcommand)]
    Quantize(QuantizeCommand),
    /// Per-frame pose features as a matrix.
    Features(FeaturesArgs),
}

#[derive(Args)]
struct FkArgs {
    /// Skeleton file.
    #[arg(long)]
    skel: PathBuf,
    /// Trajectory motion file.
    #[arg(long)]
    motion: PathBuf,
    /// Output keypoint motion file.
    #[arg(long)]
    out: PathBuf,
    /// Emit markers after the joints.
    #[arg(long)]
    markers: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct IkArgs {
    #[arg(long)]
    skel: PathBuf,
    /// Keypoint motion file, one label per skeleton joint.
    #[arg(long)]
    keypoints: PathBuf,
    /// Output trajectory file.
    #[arg(long)]
    out: PathBuf,
    /// Skip the quaternion hemisphere continuity pass.
    #[arg(long)]
    no_continuity: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RetargetArgs {
    /// Human motion: a trajectory, or keypoints reconstructed with IK first.
    #[arg(long)]
    human: PathBuf,
    #[arg(long)]
    human_skel: PathBuf,
    #[arg(long)]
    robot_skel: PathBuf,
    /// Correspondence map, optionally carrying solver options.
    #[arg(long)]
    map: PathBuf,
    /// Output robot trajectory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MetricsCommand {
    /// MPJPE, velocity and acceleration errors between two trajectories.
    Track(TrackArgs),
    /// FID, diversity, multimodality, MM-Dist and R-precision over feature matrices.
    Gen(GenArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// Reference trajectory.
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Executed trajectory.
    #[arg(long = "exec")]
    executed: PathBuf,
    /// Fall threshold on the executed trajectory's center-of-mass heights, meters.
    #[arg(long)]
    height_threshold: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Generated motion features.
    #[arg(long)]
    generated: PathBuf,
    /// Ground-truth motion features.
    #[arg(long)]
    real: PathBuf,
    /// Text features row-matched to `--generated`; enables MM-Dist and R-precision.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long, default_value_t = 300)]
    diversity_pairs: usize,
    /// Pairs per text group; needs labels on `--generated`.
    #[arg(long, default_value_t = 10)]
    mm_pairs: usize,
    #[arg(long, default_value_t = 32)]
    pool: usize,
    #[arg(long, default_value_t = 3)]
    top_k: usize,
    /// Seed for the random pairings; defaults to $RETARGET_KIT_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QuantizeCommand {
    /// Nearest-entry token for each latent row.
    Assign(AssignArgs),
    /// One EMA update on a latent batch, then dead-code reset.
    Update(UpdateArgs),
}

#[derive(Args)]
struct AssignArgs {
    /// Codebook or matrix file.
    #[arg(long)]
    codebook: PathBuf,
    /// Latent matrix file.
    #[arg(long)]
    latents: PathBuf,
    /// Output token file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    downsample: Option<usize>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct UpdateArgs {
    #[arg(long)]
    codebook: PathBuf,
    #[arg(long)]
    latents: PathBuf,
    /// Output codebook file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    decay: Option<f64>,
    /// Entries used fewer times than this are reset; 0 disables the reset.
    #[arg(long, default_value_t = DEFAULT_USAGE_THRESHOLD)]
    reset_threshold: f64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    skel: PathBuf,
    /// Trajectory or keypoint motion (keypoints go through IK first).
    #[arg(long)]
    motion: PathBuf,
    /// Output matrix file, one row per feature frame.
    #[arg(long)]
    out: PathBuf,
    /// Squared-speed threshold for foot contacts.
    #[arg(long, default_value_t = DEFAULT_CONTACT_THRESHOLD)]
    contact_threshold: f64,
    /// Left heel, left toe, right heel, right toe marker or joint names.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    contacts: Option<Vec<String>>,
    /// Store the values in a binary sidecar next to the output.
    #[arg(long)]
    sidecar: bool,
    #[arg(long)]
    report: Option<PathBuf>,
}

/// An error with the file or flag it came from.
struct Failure {
    context: String,
    error: Error,
}

trait Context<T> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, Failure>;
}

impl<T, E: Into<Error>> Context<T> for Result<T, E> {
    fn context(self, what: impl std::fmt::Display) -> Result<T, Failure> {
        self.map_err(|e| Failure { context: what.to_string(), error: e.into() })
    }
}

fn usage(flag: &str, message: impl std::fmt::Display) -> Failure {
    Failure {
        context: flag.to_string(),
        error: IoError::parse(Path::new(flag), "value", message).into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fk(a) => fk(a),
        Command::Ik(a) => ik(a),
        Command::Retarget(a) => retarget(a),
        Command::Metrics(MetricsCommand::Track(a)) => track(a),
        Command::Metrics(MetricsCommand::Gen(a)) => gen(a),
        Command::Quantize(QuantizeCommand::Assign(a)) => assign(a),
        Command::Quantize(QuantizeCommand::Update(a)) => update(a),
        Command::Features(a) => features(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.error.to_string();
            if message.starts_with(&f.context) {
                eprintln!("error: {message}");
            } else {
                eprintln!("error: {}: {message}", f.context);
            }
            match f.error.class() {
                ErrorClass::Validation => ExitCode::from(2),
                ErrorClass::Numeric => ExitCode::from(3),
            }
        }
    }
}

fn load<T: Document>(path: &Path) -> Result<T, Failure> {
    T::load(path).context(path.display())
}

fn save<T: Document>(value: &T, path: &Path) -> Result<(), Failure> {
    value.save(path).context(path.display())
}

fn write_report(path: &Option<PathBuf>, command: &str, body: Value) -> Result<(), Failure> {
    let Some(path) = path else { return Ok(()) };
    let mut map = Map::new();
    map.insert("command".into(), command.into());
    if let Value::Object(b) = body {
        map.extend(b);
    }
    save_report(path, map).context(path.display())
}

fn load_trajectory(path: &Path) -> Result<JointTrajectory, Failure> {
    load::<MotionFile>(path)?
        .into_trajectory()
        .ok_or_else(|| usage(&path.display().to_string(), "expected a trajectory motion file"))
}

fn load_keypoints(path: &Path) -> Result<KeypointMotion, Failure> {
    load::<MotionFile>(path)?
        .into_keypoints()
        .ok_or_else(|| usage(&path.display().to_string(), "expected a keypoint motion file"))
}

/// Checks that a trajectory's DoF labels match the skeleton.
fn check_trajectory(skel: &Skeleton, traj: &JointTrajectory, path: &Path) -> Result<(), Failure> {
    if traj.dof_labels != skel.dof_labels() {
        return Err(usage(
            &path.display().to_string(),
            format!("DoF labels do not match skeleton `{}`", skel.name()),
        ));
    }
    for p in &traj.frames {
        skel.validate_pose(p).context(path.display())?;
    }
    Ok(())
}

/// Joint trajectory for `skel` from a trajectory or keypoint file.
fn poses_for(skel: &Skeleton, path: &Path) -> Result<(Vec<Pose>, f64), Failure> {
    match load::<MotionFile>(path)? {
        MotionFile::Trajectory(t) => {
            check_trajectory(skel, &t, path)?;
            Ok((t.frames, t.fps))
        }
        MotionFile::Keypoints { motion, .. } => {
            let poses = reconstruct_sequence(skel, &motion, &IkOptions::default()).context(path.display())?;
            Ok((poses, motion.fps))
        }
    }
}

fn fk(a: FkArgs) -> Result<(), Failure> {
    let skel: Skeleton = load(&a.skel)?;
    let traj = load_trajectory(&a.motion)?;
    check_trajectory(&skel, &traj, &a.motion)?;
    let mut labels: Vec<String> = skel.joints().iter().map(|j| j.name.clone()).collect();
    if a.markers {
        labels.extend(skel.markers().iter().map(|m| m.name.clone()));
    }
    let mut frames = Vec::with_capacity(traj.len());
    for p in &traj.frames {
        let fk = skel.fk(p).context(a.motion.display())?;
        let mut row: Vec<_> = fk.joints.iter().map(|t| t.position).collect();
        if a.markers {
            row.extend(fk.markers.iter().map(|t| t.position));
        }
        frames.push(row);
    }
    let out = MotionFile::Keypoints {
        skeleton: Some(skel.name().to_string()),
        motion: KeypointMotion { fps: traj.fps, labels, frames },
    };
    save(&out, &a.out)?;
    write_report(&a.report, "fk", json!({"frames": traj.len(), "points": skel.joint_count()}))
}

fn ik(a: IkArgs) -> Result<(), Failure> {
    let skel: Skeleton = load(&a.skel)?;
    let kp = load_keypoints(&a.keypoints)?;
    let opts = IkOptions { continuity: !a.no_continuity, ..Default::default() };
    let poses = reconstruct_sequence(&skel, &kp, &opts).context(a.keypoints.display())?;
    let traj = JointTrajectory::new(&skel, kp.fps, poses);
    save(&MotionFile::Trajectory(traj), &a.out)?;
    write_report(&a.report, "ik", json!({"frames": kp.len(), "joints": skel.joint_count()}))
}

fn report_value(r: &RetargetReport) -> Value {
    let mut m = Map::new();
    m.insert("objective".into(), finite(r.objective));
    m.insert("iterations".into(), r.iterations.into());
    m.insert("converged".into(), r.converged.into());
    m.insert("position_residuals".into(), r.position_residuals.iter().map(|v| finite(*v)).collect());
    m.insert("orientation_residuals".into(), r.orientation_residuals.iter().map(|v| finite(*v)).collect());
    m.insert("limit_violations".into(), r.limit_violations.into());
    m.insert("monotone".into(), r.objective_trace.windows(2).all(|w| w[1] <= w[0]).into());
    if let Some(f) = &r.failure {
        m.insert("failure".into(), f.clone().into());
    }
    Value::Object(m)
}

/// Non-finite numbers are written as strings so the report stays valid JSON.
fn finite(v: f64) -> Value {
    if v.is_finite() {
        v.into()
    } else {
        v.to_string().into()
    }
}

fn retarget(a: RetargetArgs) -> Result<(), Failure> {
    let human: Skeleton = load(&a.human_skel)?;
    let robot: Skeleton = load(&a.robot_skel)?;
    let map: CorrespondenceFile = load(&a.map)?;
    let corr = map.resolve(&human, &robot).context(a.map.display())?;
    let options = map.options.clone().unwrap_or_else(RetargetOptions::default);
    let (poses, fps) = poses_for(&human, &a.human)?;
    let (traj, reports) = retarget_sequence(&human, &poses, &robot, &corr, &options, fps).context(a.map.display())?;
    save(&MotionFile::Trajectory(traj), &a.out)?;

    let max_residual = reports.iter().map(RetargetReport::max_position_residual).fold(0.0, f64::max);
    let failed = reports.iter().filter(|r| r.failure.is_some()).count();
    write_report(
        &a.report,
        "retarget",
        json!({
            "human_skeleton": human.name(),
            "robot_skeleton": robot.name(),
            "scale": corr.scale,
            "frames": reports.len(),
            "failed_frames": failed,
            "max_position_residual": finite(max_residual),
            "limit_violations": reports.iter().map(|r| r.limit_violations).sum::<usize>(),
            "all_monotone": reports.iter().all(|r| r.objective_trace.windows(2).all(|w| w[1] <= w[0])),
            "per_frame": reports.iter().map(report_value).collect::<Vec<_>>(),
        }),
    )?;
    if failed > 0 {
        eprintln!("warning: {failed} frame(s) failed and carried the previous solution forward");
    }
    Ok(())
}

fn print_table(rows: &[(&str, f64, usize)]) {
    println!("{:<16} {:>16} {:>8}", "metric", "value", "n");
    for (name, value, n) in rows {
        println!("{name:<16} {value:>16.6} {n:>8}");
    }
}

fn track(a: TrackArgs) -> Result<(), Failure> {
    let reference = load_trajectory(&a.reference)?;
    let executed = load_trajectory(&a.executed)?;
    if reference.dof_labels != executed.dof_labels {
        return Err(usage("--exec", "DoF labels differ from the reference"));
    }
    let m = tracking_metrics(&reference, &executed).context("--ref/--exec")?;
    let n = m.frames;
    let mut rows = vec![("mpjpe_mrad", m.mpjpe * 1000.0, n), ("vel_err", m.vel_err, n), ("accel_err", m.accel_err, n)];
    let mut body = json!({
        "frames": n,
        "mpjpe": m.mpjpe,
        "vel_err": m.vel_err,
        "accel_err": m.accel_err,
    });
    if let Some(h) = a.height_threshold {
        let s = success_rate(&[&executed], h).context("--exec")?;
        rows.push(("success_rate", s, 1));
        body["success_rate"] = s.into();
    }
    print_table(&rows);
    write_report(&a.report, "metrics track", body)
}

fn seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map_err(|_| usage(SEED_VAR, format!("`{v}` is not an unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn features_of(path: &Path) -> Result<FeatureMatrix, Failure> {
    let m: MatrixFile = load(path)?;
    let f = FeatureMatrix::new(m.data).context(path.display())?;
    match m.labels {
        Some(l) => f.with_labels(l).context(path.display()),
        None => Ok(f),
    }
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let seed = seed(a.seed)?;
    let generated = features_of(&a.generated)?;
    let real = features_of(&a.real)?;
    let fid = fid_report(&generated, &real).context("--generated/--real")?;
    if fid.rank_deficient {
        eprintln!("warning: FID inputs have no more samples than dimensions; covariances are singular");
    }
    let n = generated.rows();
    let mut rows = vec![("fid", fid.value, n)];
    let mut body = Map::new();
    body.insert("seed".into(), seed.into());
    body.insert("fid".into(), fid.value.into());
    let pairs = a.diversity_pairs.min(n / 2);
    let div = diversity(&generated, pairs, seed).context("--generated")?;
    rows.push(("diversity", div, pairs));
    body.insert("diversity".into(), div.into());
    if generated.labels().is_some() {
        let mm = multimodality(&generated, a.mm_pairs, seed).context("--generated")?;
        rows.push(("multimodality", mm, a.mm_pairs));
        body.insert("multimodality".into(), mm.into());
    }
    let names: Vec<String>;
    if let Some(text) = &a.text {
        let text = features_of(text)?;
        let d = mm_dist(&text, &generated).context("--text")?;
        rows.push(("mm_dist", d, n));
        body.insert("mm_dist".into(), d.into());
        let r = r_precision(&text, &generated, a.pool, a.top_k, seed).context("--text")?;
        names = (1..=a.top_k).map(|k| format!("r_precision@{k}")).collect();
        for (name, v) in names.iter().zip(&r) {
            body.insert(name.clone(), (*v).into());
        }
        rows.extend(names.iter().zip(&r).map(|(name, v)| (name.as_str(), *v, n)));
    }
    print_table(&rows);
    write_report(&a.report, "metrics gen", Value::Object(body))
}

fn assign(a: AssignArgs) -> Result<(), Failure> {
    let cb: Codebook = load(&a.codebook)?;
    let z: MatrixFile = load(&a.latents)?;
    let mut tokens = cb.assign(&z.data).context(a.latents.display())?;
    tokens.downsample = a.downsample;
    tokens.frames = a.downsample.map(|l| z.data.nrows() * l);
    save(&tokens, &a.out)?;
    let error = cb.quantization_error(&z.data).context(a.latents.display())?;
    let used = {
        let mut seen = vec![false; cb.size()];
        tokens.indices.iter().for_each(|&i| seen[i] = true);
        seen.iter().filter(|s| **s).count()
    };
    write_report(
        &a.report,
        "quantize assign",
        json!({"tokens": tokens.len(), "codebook_size": cb.size(), "codes_used": used, "quantization_error": error}),
    )
}

fn update(a: UpdateArgs) -> Result<(), Failure> {
    let mut cb: Codebook = load(&a.codebook)?;
    if let Some(d) = a.decay {
        cb = cb.with_decay(d).context("--decay")?;
    }
    let z: MatrixFile = load(&a.latents)?;
    let before = cb.quantization_error(&z.data).context(a.latents.display())?;
    let tokens = cb.assign(&z.data).context(a.latents.display())?;
    cb.ema_update(&z.data, &tokens).context(a.latents.display())?;
    let resets = if a.reset_threshold > 0.0 {
        cb.reset_dead_codes(&z.data, a.reset_threshold).context(a.latents.display())?
    } else {
        0
    };
    let after = cb.quantization_error(&z.data).context(a.latents.display())?;
    save(&cb, &a.out)?;
    write_report(
        &a.report,
        "quantize update",
        json!({"resets": resets, "quantization_error_before": before, "quantization_error_after": after}),
    )
}

fn features(a: FeaturesArgs) -> Result<(), Failure> {
    let skel: Skeleton = load(&a.skel)?;
    let (poses, fps) = poses_for(&skel, &a.motion)?;
    let mut options = FeatureOptions { contact_threshold: a.contact_threshold, ..Default::default() };
    if let Some(c) = a.contacts {
        options.contact_points = c.try_into().map_err(|_| usage("--contacts", "expected four names"))?;
    }
    let rows = build_pose_features(&skel, &poses, fps, &options).context(a.motion.display())?;
    let layout = FeatureLayout { joints: skel.joint_count() - 1 };
    let mut out = MatrixFile::from_rows(&rows, layout.dim());
    if a.sidecar {
        let name = a.out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "features".into());
        out.sidecar = Some(PathBuf::from(format!("{name}.bin")));
    }
    save(&out, &a.out)?;
    write_report(&a.report, "features", json!({"frames": rows.len(), "dim": layout.dim(), "joints": layout.joints}))
}
