//! Tracking metrics over joint trajectories and generation metrics over
//! feature matrices.

mod generation;
mod tracking;

pub use generation::*;
pub use tracking::*;

/// Seed used by the randomized generation metrics unless the caller overrides it.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("trajectories differ in {what}: {left} vs {right}")]
    LengthMismatch { what: &'static str, left: String, right: String },
    #[error("need at least {needed} frames, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("fps must be finite and positive, got {0}")]
    BadFps(f64),
    #[error("trajectory {0} has no center-of-mass heights")]
    MissingHeights(usize),
    #[error("no inputs")]
    Empty,
    #[error("feature dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: String, right: String },
    #[error("need at least 2 samples to estimate a covariance, found {0}")]
    DegenerateSample(usize),
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("group `{group}` needs at least {needed} rows, has {found}")]
    GroupTooSmall { group: String, needed: usize, found: usize },
    #[error("feature matrix has no group labels")]
    MissingLabels,
    #[error("label count {found} does not match {expected} rows")]
    LabelCount { expected: usize, found: usize },
    #[error("retrieval pool of {pool} exceeds the {n} available samples")]
    PoolTooLarge { pool: usize, n: usize },
    #[error("top-k {k} must be in 1..{pool}")]
    BadTopK { k: usize, pool: usize },
    #[error("pair ({0}, {1}) is out of range")]
    BadPair(usize, usize),
    #[error("input contains NaN or infinity")]
    NonFinite,
}
