//! Random elastic displacement fields and backward warping.
//!
//! Fields follow the classic elastic-distortion recipe: per-pixel
//! displacements drawn i.i.d. uniform from `[-1, 1]`, Gaussian-smoothed
//! with standard deviation `sigma` to make them spatially coherent, then
//! scaled by `alpha` (pixels). Because smoothing is a convex combination,
//! no displacement component can exceed `alpha` in magnitude.

use crate::error::{Error, Result};
use crate::image::{bilinear_sample, BinaryMask, FloatImage};
use crate::imaging::gaussian_filter_float;
use crate::rng::SplitMix64;

/// Elastic deformation parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ElasticParams {
    /// Displacement scale in pixels; 0 yields the identity warp.
    pub alpha: f64,
    /// Smoothing strength of the random field, in pixels.
    pub sigma: f64,
    /// Seed for the field's random draw.
    pub seed: u64,
}

impl Default for ElasticParams {
    fn default() -> Self {
        ElasticParams {
            alpha: 34.0,
            sigma: 8.0,
            seed: 0,
        }
    }
}

impl ElasticParams {
    /// Checks the parameter domains: `alpha` finite and nonnegative,
    /// `sigma` finite and positive.
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::param(format!(
                "alpha {} must be finite and >= 0",
                self.alpha
            )));
        }
        if !self.sigma.is_finite() || self.sigma <= 0.0 {
            return Err(Error::param(format!(
                "sigma {} must be finite and positive",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Dense per-pixel displacement field.
///
/// `dx`/`dy` give, for each output pixel, the offset added to its own
/// coordinates to find the source sample, i.e. warping is backward:
/// `out(x, y) = in(x + dx(x, y), y + dy(x, y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl DisplacementField {
    /// Wraps explicit displacement planes (mainly useful in tests and for
    /// composing custom warps).
    pub fn new(width: usize, height: usize, dx: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "field dimensions {width}x{height} must be nonzero"
            )));
        }
        if dx.len() != width * height || dy.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "field planes hold {}/{} values but {width}x{height} needs {}",
                dx.len(),
                dy.len(),
                width * height
            )));
        }
        if dx.iter().chain(&dy).any(|d| !d.is_finite()) {
            return Err(Error::param("field contains a non-finite displacement"));
        }
        Ok(DisplacementField {
            width,
            height,
            dx,
            dy,
        })
    }

    /// Uniform field, useful for pure translations in tests.
    pub fn constant(width: usize, height: usize, dx: f64, dy: f64) -> Result<Self> {
        DisplacementField::new(
            width,
            height,
            vec![dx; width * height],
            vec![dy; width * height],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dx(&self, x: usize, y: usize) -> f64 {
        self.dx[y * self.width + x]
    }

    #[inline]
    pub fn dy(&self, x: usize, y: usize) -> f64 {
        self.dy[y * self.width + x]
    }

    /// Largest displacement magnitude on either axis.
    pub fn max_abs(&self) -> f64 {
        self.dx
            .iter()
            .chain(&self.dy)
            .fold(0.0f64, |m, d| m.max(d.abs()))
    }
}

/// Draws a smoothed random displacement field for a `width` x `height`
/// raster.
///
/// Both planes are filled in raster order from one seeded stream — the
/// whole `dx` plane first, then `dy` — smoothed with `sigma`, and scaled by
/// `alpha`; the result is a pure function of `(width, height, params)`.
/// Every component is bounded by `alpha` in magnitude.
pub fn make_displacement_field(
    width: usize,
    height: usize,
    params: &ElasticParams,
) -> Result<DisplacementField> {
    params.validate()?;
    let mut rng = SplitMix64::new(params.seed);
    let mut draw_plane = || -> Result<Vec<f64>> {
        let noise: Vec<f64> = (0..width * height)
            .map(|_| rng.uniform(-1.0, 1.0))
            .collect();
        let smooth = gaussian_filter_float(&FloatImage::new(width, height, noise)?, params.sigma)?;
        Ok(smooth.pixels().iter().map(|v| v * params.alpha).collect())
    };
    let dx = draw_plane()?;
    let dy = draw_plane()?;
    DisplacementField::new(width, height, dx, dy)
}

/// Backward-warps an image through a displacement field with bilinear
/// sampling; out-of-frame sources clamp to the border. Field and image
/// must share dimensions.
pub fn warp(img: &FloatImage, field: &DisplacementField) -> Result<FloatImage> {
    if img.width() != field.width || img.height() != field.height {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs field {}x{}",
            img.width(),
            img.height(),
            field.width,
            field.height
        )));
    }
    let mut out = Vec::with_capacity(img.pixels().len());
    for y in 0..img.height() {
        for x in 0..img.width() {
            out.push(bilinear_sample(
                img,
                x as f64 + field.dx(x, y),
                y as f64 + field.dy(x, y),
            ));
        }
    }
    FloatImage::new(img.width(), img.height(), out)
}

/// Backward-warps a mask with nearest-neighbor sampling so it stays
/// strictly binary. Sources that round outside the frame read background.
pub fn warp_mask(mask: &BinaryMask, field: &DisplacementField) -> Result<BinaryMask> {
    if mask.width() != field.width || mask.height() != field.height {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs field {}x{}",
            mask.width(),
            mask.height(),
            field.width,
            field.height
        )));
    }
    let mut out = Vec::with_capacity(mask.bits().len());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let sx = (x as f64 + field.dx(x, y)).round();
            let sy = (y as f64 + field.dy(x, y)).round();
            let inside =
                sx >= 0.0 && sy >= 0.0 && sx < mask.width() as f64 && sy < mask.height() as f64;
            out.push(inside && mask.get(sx as usize, sy as usize));
        }
    }
    BinaryMask::new(mask.width(), mask.height(), out)
}
