//! Error type shared by every module in the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes the toolkit can report.
///
/// Variants are deliberately fine-grained so callers (and tests) can match on
/// the precise failure instead of string-comparing messages.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two buffers that must share dimensions do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A histogram-based operation received an image with fewer than two
    /// distinct intensity levels, so no threshold separates two classes.
    #[error("degenerate histogram: image has fewer than two distinct intensity levels")]
    DegenerateHistogram,

    /// A mask-consuming operation received a mask with no foreground pixels.
    #[error("empty mask: no foreground pixels")]
    EmptyMask,

    /// Percentile selection collapsed to a zero-width intensity range.
    #[error("degenerate range: low and high percentiles coincide at {0}")]
    DegenerateRange(u16),

    /// Breast segmentation could not produce a usable foreground region.
    #[error("segmentation failed: {0}")]
    Segmentation(String),

    /// An inpainting hole has no known boundary to march inward from.
    #[error("no boundary: hole covers the entire image")]
    NoBoundary,

    /// A deformation moved the target region entirely out of frame.
    #[error("deformation out of bounds: warped region left the image")]
    DeformationOutOfBounds,

    /// A trainer implementation violated the scheduler's calling contract.
    #[error("trainer contract violation: {0}")]
    TrainerContract(String),

    /// A record in a line-oriented input file could not be parsed.
    /// Rows are numbered from 1.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    // Wrapper variants leave the cause out of their own message: printers
    // that walk the chain (anyhow's `{:#}`) append it once via `source()`.
    #[error("i/o error")]
    Io(#[from] std::io::Error),

    #[error("image codec error")]
    Image(#[from] image::ImageError),

    #[error("json error")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Shorthand for [`Error::InvalidParameter`] with a formatted message.
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
