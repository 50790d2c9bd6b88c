use crate::dofs::DofError;
use crate::features::FeatureError;
use crate::ik::IkError;
use crate::io::IoError;
use crate::metrics::MetricError;
use crate::retarget::RetargetError;
use crate::rotations::RotationError;
use crate::skeleton::SkeletonError;
use crate::solver::SolverError;
use crate::vq::VqError;

/// Any error raised by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Dof(#[from] DofError),
    #[error(transparent)]
    Ik(#[from] IkError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
    #[error(transparent)]
    Vq(#[from] VqError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Whether an error comes from bad input or from the numerics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
}

fn rotation_class(e: &RotationError) -> ErrorClass {
    match e {
        RotationError::DegenerateBone { .. } | RotationError::RankDeficient { .. } | RotationError::DegenerateFrame(_) => {
            ErrorClass::Numeric
        }
        _ => ErrorClass::Validation,
    }
}

fn ik_class(e: &IkError) -> ErrorClass {
    match e {
        IkError::Rotation { source, .. } => rotation_class(source),
        IkError::Frame { source, .. } => ik_class(source),
        _ => ErrorClass::Validation,
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Rotation(e) => rotation_class(e),
            Error::Ik(e) | Error::Feature(FeatureError::Ik(e)) => ik_class(e),
            Error::Solver(_) | Error::Retarget(RetargetError::NonFiniteObjective) => ErrorClass::Numeric,
            Error::Metric(MetricError::DegenerateSample(_)) => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
