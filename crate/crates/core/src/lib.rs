//! Human-to-humanoid motion retargeting.
//!
//! The crate covers the geometric core of a text-to-robot-motion pipeline:
//! SO(3) utilities, articulated skeletons with forward kinematics,
//! hierarchical inverse kinematics from keypoints, optimization-based
//! retargeting onto robot skeletons, codebook quantization, evaluation
//! metrics, pose features and versioned file formats.

pub mod dofs;
mod error;
pub mod features;
pub mod ik;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod presets;
pub mod retarget;
pub mod rotations;
pub mod skeleton;
pub mod solver;
mod svd3;
pub mod vq;

pub use error::{Error, ErrorClass, Result};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/rotations.md")]
    mod rotations {}
    #[doc = include_str!("../../../book/src/skeletons.md")]
    mod skeletons {}
    #[doc = include_str!("../../../book/src/retargeting.md")]
    mod retargeting {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/files-and-cli.md")]
    mod files_and_cli {}
}
