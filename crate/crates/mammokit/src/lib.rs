//! Deterministic preprocessing, augmentation, and evaluation toolkit for
//! mammography mass detection.
//!
//! The crate covers everything around the detector that must be exact and
//! reproducible:
//!
//! - **Preprocessing** — breast segmentation ([`normalize::segment_breast`]),
//!   percentile truncation to `[0, 1]` ([`normalize::truncate_normalize`]),
//!   and contrast-enhanced three-channel synthesis
//!   ([`enhance::synthesize_channels`]).
//! - **Augmentation** — locality-preserving natural deformation of lesions
//!   ([`augment::natural_deform`]), classic geometric transforms, and
//!   model-input resizing.
//! - **Evaluation** — greedy box matching, TPR/FPPI counting, and FROC
//!   curves ([`eval`]).
//! - **Training support** — a hard-sample dynamic-update scheduler
//!   ([`schedule`]) that talks to any trainer through a narrow trait.
//! - **Batch plumbing** — manifest-driven pipelines with full provenance
//!   ([`pipeline`]) behind the `mammokit` command-line tool.
//!
//! Every random choice flows from explicit [`rng::SplitMix64`] seeds and
//! every algorithm is single-precision-free integer or `f64` math, so any
//! run is bit-reproducible across machines, thread counts, and the
//! `parallel` feature flag.

pub mod augment;
pub mod enhance;
pub mod error;
pub mod eval;
pub mod image;
pub mod imaging;
pub mod io;
pub mod normalize;
pub(crate) mod parallel;
pub mod pipeline;
pub mod rng;
pub mod schedule;

pub use error::{Error, Result};
pub use image::{BBox, BinaryMask, FloatImage, GrayImage};
