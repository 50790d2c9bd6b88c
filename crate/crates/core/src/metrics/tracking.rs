use crate::motion::JointTrajectory;

use super::MetricError;

fn check_pair(reference: &JointTrajectory, executed: &JointTrajectory, min_frames: usize) -> Result<(), MetricError> {
    if reference.len() != executed.len() {
        return Err(MetricError::LengthMismatch {
            what: "frame count",
            left: reference.len().to_string(),
            right: executed.len().to_string(),
        });
    }
    if reference.dof_count() != executed.dof_count() {
        return Err(MetricError::LengthMismatch {
            what: "DoF count",
            left: reference.dof_count().to_string(),
            right: executed.dof_count().to_string(),
        });
    }
    if reference.fps != executed.fps {
        return Err(MetricError::LengthMismatch {
            what: "fps",
            left: reference.fps.to_string(),
            right: executed.fps.to_string(),
        });
    }
    if !(reference.fps.is_finite() && reference.fps > 0.0) {
        return Err(MetricError::BadFps(reference.fps));
    }
    if reference.len() < min_frames.max(1) {
        return Err(MetricError::TooShort { needed: min_frames.max(1), found: reference.len() });
    }
    for f in reference.frames.iter().chain(&executed.frames) {
        if f.joint_values.len() != reference.dof_count() {
            return Err(MetricError::LengthMismatch {
                what: "frame width",
                left: reference.dof_count().to_string(),
                right: f.joint_values.len().to_string(),
            });
        }
        if f.joint_values.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
    }
    Ok(())
}

/// `exec − ref` per frame.
fn deltas(reference: &JointTrajectory, executed: &JointTrajectory) -> Vec<Vec<f64>> {
    reference
        .frames
        .iter()
        .zip(&executed.frames)
        .map(|(r, e)| e.joint_values.iter().zip(&r.joint_values).map(|(a, b)| a - b).collect())
        .collect()
}

fn mean_abs(rows: &[Vec<f64>]) -> f64 {
    let n: usize = rows.iter().map(Vec::len).sum();
    if n == 0 {
        return 0.0;
    }
    rows.iter().flatten().map(|v| v.abs()).sum::<f64>() / n as f64
}

/// Central first differences, one-sided at both ends.
pub fn velocities(frames: &[Vec<f64>], fps: f64) -> Vec<Vec<f64>> {
    let t = frames.len();
    (0..t)
        .map(|i| {
            let (a, b, span) = match i {
                0 => (0, 1, 1.0),
                _ if i == t - 1 => (t - 2, t - 1, 1.0),
                _ => (i - 1, i + 1, 2.0),
            };
            frames[b].iter().zip(&frames[a]).map(|(x, y)| (x - y) * fps / span).collect()
        })
        .collect()
}

/// Central second differences; the end frames reuse their neighbour's stencil.
pub fn accelerations(frames: &[Vec<f64>], fps: f64) -> Vec<Vec<f64>> {
    let t = frames.len();
    (0..t)
        .map(|i| {
            let c = i.clamp(1, t - 2);
            (0..frames[c].len())
                .map(|k| (frames[c + 1][k] - 2.0 * frames[c][k] + frames[c - 1][k]) * fps * fps)
                .collect()
        })
        .collect()
}

/// Mean absolute joint-angle error over all frames and DoFs, radians.
/// Root position and orientation are not included.
pub fn mpjpe(reference: &JointTrajectory, executed: &JointTrajectory) -> Result<f64, MetricError> {
    check_pair(reference, executed, 1)?;
    Ok(mean_abs(&deltas(reference, executed)))
}

/// Mean absolute joint-velocity error, rad/s.
pub fn vel_err(reference: &JointTrajectory, executed: &JointTrajectory) -> Result<f64, MetricError> {
    check_pair(reference, executed, 2)?;
    Ok(mean_abs(&velocities(&deltas(reference, executed), reference.fps)))
}

/// Mean absolute joint-acceleration error, rad/s².
pub fn accel_err(reference: &JointTrajectory, executed: &JointTrajectory) -> Result<f64, MetricError> {
    check_pair(reference, executed, 3)?;
    Ok(mean_abs(&accelerations(&deltas(reference, executed), reference.fps)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics {
    pub frames: usize,
    pub mpjpe: f64,
    pub vel_err: f64,
    pub accel_err: f64,
}

pub fn tracking_metrics(reference: &JointTrajectory, executed: &JointTrajectory) -> Result<TrackingMetrics, MetricError> {
    Ok(TrackingMetrics {
        frames: reference.len(),
        mpjpe: mpjpe(reference, executed)?,
        vel_err: vel_err(reference, executed)?,
        accel_err: accel_err(reference, executed)?,
    })
}

/// Fraction of executed motions whose center-of-mass height never drops
/// strictly below `threshold` meters. A height equal to the threshold counts
/// as standing.
pub fn success_rate(executed: &[&JointTrajectory], threshold: f64) -> Result<f64, MetricError> {
    if executed.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut successes = 0usize;
    for (i, traj) in executed.iter().enumerate() {
        let heights = traj.com_heights.as_ref().ok_or(MetricError::MissingHeights(i))?;
        if heights.iter().any(|h| h.is_nan()) {
            return Err(MetricError::NonFinite);
        }
        if heights.iter().all(|&h| h >= threshold) {
            successes += 1;
        }
    }
    Ok(successes as f64 / executed.len() as f64)
}
