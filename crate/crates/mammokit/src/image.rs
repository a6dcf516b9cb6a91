//! Core raster and geometry types.
//!
//! All images are row-major with the origin at the top-left corner; `(x, y)`
//! indexes column `x` of row `y`. Pixel buffers are plain `Vec`s so they can
//! be shared read-only across threads during batch processing. Bounding
//! boxes use half-open integer intervals: a box covers the pixel centers
//! `x_min <= x < x_max`, `y_min <= y < y_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer-intensity grayscale image, 8- or 16-bit.
///
/// Pixels are stored as `u16` regardless of depth; `bit_depth` records the
/// nominal range so files round-trip at their original precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    pixels: Vec<u16>,
}

impl GrayImage {
    /// Wraps a pixel buffer, validating dimensions and intensity range.
    pub fn new(width: usize, height: usize, bit_depth: u8, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "image dimensions {width}x{height} must be nonzero"
            )));
        }
        if bit_depth != 8 && bit_depth != 16 {
            return Err(Error::param(format!(
                "bit depth {bit_depth} not supported (use 8 or 16)"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "pixel buffer holds {} values but {width}x{height} needs {}",
                pixels.len(),
                width * height
            )));
        }
        let max = max_intensity(bit_depth);
        if let Some(&bad) = pixels.iter().find(|&&p| p > max) {
            return Err(Error::param(format!(
                "intensity {bad} exceeds {bit_depth}-bit maximum {max}"
            )));
        }
        Ok(GrayImage {
            width,
            height,
            bit_depth,
            pixels,
        })
    }

    /// Constant image of the given intensity.
    pub fn filled(width: usize, height: usize, bit_depth: u8, value: u16) -> Result<Self> {
        GrayImage::new(width, height, bit_depth, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    /// Largest intensity representable at this image's depth.
    pub fn max_value(&self) -> u16 {
        max_intensity(self.bit_depth)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u16) {
        debug_assert!(x < self.width && y < self.height);
        debug_assert!(value <= self.max_value());
        self.pixels[y * self.width + x] = value;
    }

    /// Copies the half-open rectangle `[x0, x1) x [y0, y1)` into a new image.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::param(format!(
                "crop [{x0},{x1})x[{y0},{y1}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        GrayImage::new(x1 - x0, y1 - y0, self.bit_depth, pixels)
    }

    /// Raw intensities as `f64`, without rescaling.
    pub(crate) fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| p as f64).collect()
    }
}

fn max_intensity(bit_depth: u8) -> u16 {
    if bit_depth == 8 {
        u8::MAX as u16
    } else {
        u16::MAX
    }
}

/// Floating-point image, used for normalized intensities in `[0, 1]` and
/// for intermediate filter results.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl FloatImage {
    /// Wraps a pixel buffer, validating dimensions and finiteness.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "image dimensions {width}x{height} must be nonzero"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "pixel buffer holds {} values but {width}x{height} needs {}",
                pixels.len(),
                width * height
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("image contains a non-finite value"));
        }
        Ok(FloatImage {
            width,
            height,
            pixels,
        })
    }

    /// Constant image of the given value.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        FloatImage::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y * self.width + x] = value;
    }

    /// Copies out the half-open window `[x0, x1) x [y0, y1)`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::param(format!(
                "crop window ({x0},{y0})..({x1},{y1}) invalid for {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        FloatImage::new(x1 - x0, y1 - y0, pixels)
    }
}

/// Samples `img` at real-valued coordinates with bilinear interpolation.
///
/// Coordinates are in pixel units with `(0.0, 0.0)` at the center of the
/// top-left pixel. Points outside the image are clamped to the border, so
/// sampling far off-image returns the nearest corner pixel, and sampling at
/// exact integer coordinates returns the stored value bit-exactly.
pub fn bilinear_sample(img: &FloatImage, x: f64, y: f64) -> f64 {
    let cx = x.clamp(0.0, (img.width - 1) as f64);
    let cy = y.clamp(0.0, (img.height - 1) as f64);
    let x0 = cx.floor() as usize;
    let y0 = cy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = cx - x0 as f64;
    let fy = cy - y0 as f64;
    let top = img.get(x0, y0) * (1.0 - fx) + img.get(x1, y0) * fx;
    let bottom = img.get(x0, y1) * (1.0 - fx) + img.get(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Binary mask with the same layout conventions as the image types.
/// `true` marks foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param(format!(
                "mask dimensions {width}x{height} must be nonzero"
            )));
        }
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "mask buffer holds {} values but {width}x{height} needs {}",
                bits.len(),
                width * height
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            bits,
        })
    }

    /// All-background mask.
    pub fn empty(width: usize, height: usize) -> Result<Self> {
        BinaryMask::new(width, height, vec![false; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y * self.width + x] = value;
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box of the foreground, or an error for an empty mask.
    pub fn tight_bbox(&self) -> Result<BBox> {
        let (mut x0, mut y0) = (usize::MAX, usize::MAX);
        let (mut x1, mut y1) = (0usize, 0usize);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.bits[y * self.width + x] {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x + 1);
                    y1 = y1.max(y + 1);
                }
            }
        }
        if !any {
            return Err(Error::EmptyMask);
        }
        BBox::new(x0 as i64, y0 as i64, x1 as i64, y1 as i64)
    }

    /// Copies the half-open rectangle `[x0, x1) x [y0, y1)` into a new mask.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::param(format!(
                "crop [{x0},{x1})x[{y0},{y1}) outside {}x{} mask",
                self.width, self.height
            )));
        }
        let mut bits = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            bits.extend_from_slice(&self.bits[y * self.width + x0..y * self.width + x1]);
        }
        BinaryMask::new(x1 - x0, y1 - y0, bits)
    }
}

/// Axis-aligned box over pixel indices; half-open on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: i64,
    pub y_min: i64,
    pub x_max: i64,
    pub y_max: i64,
}

impl BBox {
    /// Validates that the box is nonempty on both axes.
    pub fn new(x_min: i64, y_min: i64, x_max: i64, y_max: i64) -> Result<Self> {
        if x_min >= x_max || y_min >= y_max {
            return Err(Error::param(format!(
                "box [{x_min},{x_max})x[{y_min},{y_max}) is empty"
            )));
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> i64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> i64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> i64 {
        self.width() * self.height()
    }
}

/// Intersection-over-union of two boxes, in `[0, 1]`.
///
/// Computed on integer pixel counts: half-open boxes intersect in a
/// half-open rectangle, so the result is an exact ratio of pixel counts.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let iw = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0);
    let ih = (a.y_max.min(b.y_max) - a.y_min.max(b.y_min)).max(0);
    let inter = iw * ih;
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}
