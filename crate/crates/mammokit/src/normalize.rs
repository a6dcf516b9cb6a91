//! Breast segmentation and truncation-based intensity normalization.
//!
//! Raw mammograms are dominated by dark background, bright labels, and a
//! long low-occupancy intensity tail, so a plain min-max rescale wastes most
//! of the output range. The pipeline here:
//!
//! 1. [`segment_breast`]: smooth, threshold, keep the largest connected
//!    region (the breast, dropping nameplates and markers), crop to its
//!    bounding rectangle.
//! 2. [`truncation_percentiles`]: pick robust low/high reference
//!    intensities from the breast pixels only, by nearest-rank percentile.
//! 3. [`truncate_normalize`]: clamp the crop to that range and map it
//!    linearly onto `[0, 1]`, guaranteeing the breast tissue itself spans
//!    the full output range.

use crate::error::{Error, Result};
use crate::image::{BinaryMask, FloatImage, GrayImage};
use crate::imaging::{gaussian_filter, largest_connected_component, otsu_threshold};

/// Default smoothing strength for segmentation.
pub const DEFAULT_SEGMENT_SIGMA: f64 = 2.0;

/// Fractions of breast pixels truncated at each end of the intensity range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationParams {
    /// Fraction of breast pixels clamped at the dark end.
    pub low_fraction: f64,
    /// Fraction of breast pixels clamped at the bright end.
    pub high_fraction: f64,
}

impl Default for TruncationParams {
    /// 5% of the darkest and 1% of the brightest breast pixels saturate.
    fn default() -> Self {
        TruncationParams {
            low_fraction: 0.05,
            high_fraction: 0.01,
        }
    }
}

impl TruncationParams {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("low_fraction", self.low_fraction),
            ("high_fraction", self.high_fraction),
        ] {
            if !v.is_finite() || !(0.0..1.0).contains(&v) {
                return Err(Error::param(format!("{name} {v} must lie in [0, 1)")));
            }
        }
        if self.low_fraction + self.high_fraction >= 1.0 {
            return Err(Error::param(format!(
                "truncation fractions {} + {} leave no intensity range",
                self.low_fraction, self.high_fraction
            )));
        }
        Ok(())
    }
}

/// A breast region cropped out of a full mammogram.
#[derive(Debug, Clone)]
pub struct BreastRoi {
    /// Crop of the *original* image over the breast's bounding rectangle.
    pub image: GrayImage,
    /// Breast pixels within the crop.
    pub mask: BinaryMask,
    /// `(x, y)` of the crop's top-left corner in the source image.
    pub origin: (usize, usize),
}

impl BreastRoi {
    /// Validates that image and mask agree and the mask is nonempty.
    pub fn new(image: GrayImage, mask: BinaryMask, origin: (usize, usize)) -> Result<Self> {
        if image.width() != mask.width() || image.height() != mask.height() {
            return Err(Error::ShapeMismatch(format!(
                "roi image {}x{} vs mask {}x{}",
                image.width(),
                image.height(),
                mask.width(),
                mask.height()
            )));
        }
        if mask.count() == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(BreastRoi {
            image,
            mask,
            origin,
        })
    }
}

/// Locates the breast and crops the image to it.
///
/// The image is Gaussian-smoothed with `sigma`, thresholded with Otsu's
/// method (pixels above the threshold are candidate foreground), and the
/// largest 8-connected component is kept — everything else, such as labels
/// or nameplates, is dropped. The returned crop covers the component's
/// tight bounding rectangle of the *original* (unsmoothed) image, with the
/// component as its mask.
pub fn segment_breast(img: &GrayImage, sigma: f64) -> Result<BreastRoi> {
    let filtered = gaussian_filter(img, sigma)?;
    let threshold = match otsu_threshold(&filtered) {
        Ok(t) => t,
        Err(Error::DegenerateHistogram) => {
            return Err(Error::Segmentation(
                "image has no distinct intensity classes to separate".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    let binary = BinaryMask::new(
        filtered.width(),
        filtered.height(),
        filtered.pixels().iter().map(|&p| p > threshold).collect(),
    )?;
    let component = match largest_connected_component(&binary) {
        Ok(c) => c,
        Err(Error::EmptyMask) => {
            return Err(Error::Segmentation(
                "threshold produced no foreground".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    let bbox = component.tight_bbox()?;
    let (x0, y0) = (bbox.x_min as usize, bbox.y_min as usize);
    let (x1, y1) = (bbox.x_max as usize, bbox.y_max as usize);
    BreastRoi::new(
        img.crop(x0, y0, x1, y1)?,
        component.crop(x0, y0, x1, y1)?,
        (x0, y0),
    )
}

/// Nearest-rank percentile pair `(p_min, p_max)` over breast pixels.
///
/// With `n` breast pixels sorted ascending, `p_min` is the value at index
/// `floor(low_fraction * n)` and `p_max` the value at index
/// `floor((1 - high_fraction) * n) - 1`, both clamped to valid indices.
/// As the fractions approach zero the pair approaches the breast min/max.
/// Background pixels in the crop never influence the result.
pub fn truncation_percentiles(roi: &BreastRoi, params: &TruncationParams) -> Result<(u16, u16)> {
    params.validate()?;
    let mut values: Vec<u16> = roi
        .mask
        .bits()
        .iter()
        .zip(roi.image.pixels())
        .filter_map(|(&inside, &p)| inside.then_some(p))
        .collect();
    if values.is_empty() {
        return Err(Error::EmptyMask);
    }
    values.sort_unstable();
    let n = values.len();
    let low_idx = rank_below(params.low_fraction, n).min(n - 1);
    let high_idx = rank_above(params.high_fraction, n).min(n - 1);
    let (p_min, p_max) = (values[low_idx], values[high_idx]);
    if p_min >= p_max {
        return Err(Error::DegenerateRange(p_min));
    }
    Ok((p_min, p_max))
}

// Both rank helpers carry a small absolute guard so products like
// `0.99 * 100`, which land a few ulps off an integer in binary floating
// point, round to the intended rank.

/// Index of the low reference value: `floor(fraction * n)` skips at most
/// `fraction * n` values below it, so with distinct values at most
/// `fraction * n + 1` pixels can saturate at the dark end.
fn rank_below(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-6).floor() as usize
}

/// Index of the high reference value: `ceil((1 - fraction) * n) - 1`
/// leaves at most `fraction * n` values strictly above it, so with
/// distinct values at most `fraction * n + 1` pixels can saturate at the
/// bright end.
fn rank_above(fraction: f64, n: usize) -> usize {
    let rank = ((1.0 - fraction) * n as f64 - 1e-6).ceil() as usize;
    rank.saturating_sub(1)
}

/// Clamps the crop to the breast percentile range and rescales to `[0, 1]`.
///
/// Every pixel of the crop — breast and leftover background alike — is
/// mapped with the same `(p_min, p_max)` pair taken from the breast mask
/// interior, so at least one breast pixel maps to exactly 0.0 and at least
/// one to exactly 1.0, and the mapping is monotone in the input intensity.
pub fn truncate_normalize(roi: &BreastRoi, params: &TruncationParams) -> Result<FloatImage> {
    let (p_min, p_max) = truncation_percentiles(roi, params)?;
    let lo = p_min as f64;
    let span = (p_max - p_min) as f64;
    let pixels = roi
        .image
        .pixels()
        .iter()
        .map(|&p| ((p as f64).clamp(lo, p_max as f64) - lo) / span)
        .collect();
    FloatImage::new(roi.image.width(), roi.image.height(), pixels)
}
