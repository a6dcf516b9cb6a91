//! Lesion-aware augmentation: natural deformation, classic geometric
//! transforms, and model-input resizing.
//!
//! The centerpiece is [`natural_deform`]: a random elastic warp applied to
//! one lesion (or to a sampled lesion-free region), composed back into the
//! untouched surrounding tissue, with the thin exposed seam repaired by
//! fast-marching inpainting. The result looks like a plausible variant of
//! the same breast rather than a globally distorted image, and every pixel
//! outside a small neighborhood of the deformed region is bit-exactly
//! preserved.

pub mod elastic;
pub mod inpaint;

use crate::enhance::ThreeChannelImage;
use crate::error::{Error, Result};
use crate::image::{BBox, BinaryMask, FloatImage};
use crate::imaging::dilate;
use crate::rng::SplitMix64;

pub use elastic::{make_displacement_field, warp, warp_mask, DisplacementField, ElasticParams};
pub use inpaint::inpaint_fmm;

/// Default seam-repair neighborhood in pixels.
pub const DEFAULT_INPAINT_RADIUS: usize = 3;
/// Default radius range (pixels) for sampled lesion-free regions.
pub const DEFAULT_REGION_RADIUS_RANGE: (usize, usize) = (16, 64);

/// An image with its lesion annotations.
///
/// Boxes are always the tight bounding boxes of the masks — the
/// constructor derives them, and every transform in this module recomputes
/// them from the transformed masks.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSample {
    pub image: FloatImage,
    pub lesion_masks: Vec<BinaryMask>,
    pub boxes: Vec<BBox>,
}

impl AugmentSample {
    /// Builds a sample, deriving one tight box per mask. Masks must match
    /// the image dimensions and be nonempty.
    pub fn new(image: FloatImage, lesion_masks: Vec<BinaryMask>) -> Result<Self> {
        let mut boxes = Vec::with_capacity(lesion_masks.len());
        for (i, mask) in lesion_masks.iter().enumerate() {
            if mask.width() != image.width() || mask.height() != image.height() {
                return Err(Error::ShapeMismatch(format!(
                    "lesion mask {i} is {}x{} but the image is {}x{}",
                    mask.width(),
                    mask.height(),
                    image.width(),
                    image.height()
                )));
            }
            boxes.push(mask.tight_bbox()?);
        }
        Ok(AugmentSample {
            image,
            lesion_masks,
            boxes,
        })
    }
}

/// What a natural deformation acts on.
#[derive(Debug, Clone)]
pub enum DeformTarget {
    /// Deform the lesion at this index; its mask and box are updated.
    Lesion(usize),
    /// Deform a lesion-free region; annotations pass through unchanged.
    Region(BinaryMask),
}

/// Elastically deforms one target region of `sample` and blends the result
/// back into the unchanged surroundings.
///
/// The warp is computed on a padded window around the target so cost
/// scales with the target, not the image. Output pixels are: the warped
/// window wherever the original or warped target mask covers, inpainted
/// repair on the thin seam band (the dilated warped-target boundary
/// intersected with newly exposed pixels), and bit-exact originals
/// everywhere else. With `alpha = 0` the call is a bit-exact identity.
pub fn natural_deform(
    sample: &AugmentSample,
    target: &DeformTarget,
    params: &ElasticParams,
    inpaint_radius: usize,
) -> Result<AugmentSample> {
    if inpaint_radius == 0 {
        return Err(Error::param("inpaint radius must be >= 1"));
    }
    let (w, h) = (sample.image.width(), sample.image.height());
    let target_mask = match target {
        DeformTarget::Lesion(i) => sample
            .lesion_masks
            .get(*i)
            .ok_or_else(|| Error::param(format!("lesion index {i} out of range")))?,
        DeformTarget::Region(mask) => {
            if mask.width() != w || mask.height() != h {
                return Err(Error::ShapeMismatch(format!(
                    "region mask {}x{} vs image {w}x{h}",
                    mask.width(),
                    mask.height()
                )));
            }
            mask
        }
    };
    let bbox = target_mask.tight_bbox()?;

    // Window: target box plus room for the largest displacement, the seam
    // band, and the inpainter's sampling disc.
    let pad = params.alpha.ceil() as usize + 2 * inpaint_radius + 2;
    let wx0 = (bbox.x_min as usize).saturating_sub(pad);
    let wy0 = (bbox.y_min as usize).saturating_sub(pad);
    let wx1 = (bbox.x_max as usize + pad).min(w);
    let wy1 = (bbox.y_max as usize + pad).min(h);
    let (win_w, win_h) = (wx1 - wx0, wy1 - wy0);

    let win_img = sample.image.crop(wx0, wy0, wx1, wy1)?;
    let win_mask = target_mask.crop(wx0, wy0, wx1, wy1)?;

    let field = make_displacement_field(win_w, win_h, params)?;
    let warped_img = warp(&win_img, &field)?;
    let warped_mask = warp_mask(&win_mask, &field)?;
    if warped_mask.count() == 0 {
        return Err(Error::DeformationOutOfBounds);
    }

    // Compose: warped content on the union of old and new target footprint.
    let mut out_win = win_img.clone();
    for y in 0..win_h {
        for x in 0..win_w {
            if win_mask.get(x, y) || warped_mask.get(x, y) {
                out_win.set(x, y, warped_img.get(x, y));
            }
        }
    }

    // Seam: newly exposed pixels near the warped boundary. Exposed pixels
    // carry warped background, which may not line up with the original
    // background around them, so the band gets repainted from both sides.
    let mut boundary = BinaryMask::empty(win_w, win_h)?;
    for y in 0..win_h {
        for x in 0..win_w {
            if !warped_mask.get(x, y) {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x + 1 == win_w
                || y + 1 == win_h
                || !warped_mask.get(x - 1, y)
                || !warped_mask.get(x + 1, y)
                || !warped_mask.get(x, y - 1)
                || !warped_mask.get(x, y + 1);
            if edge {
                boundary.set(x, y, true);
            }
        }
    }
    let near_boundary = dilate(&boundary, inpaint_radius);
    let mut seam = BinaryMask::empty(win_w, win_h)?;
    for y in 0..win_h {
        for x in 0..win_w {
            if near_boundary.get(x, y) && win_mask.get(x, y) && !warped_mask.get(x, y) {
                seam.set(x, y, true);
            }
        }
    }
    if seam.count() > 0 {
        out_win = inpaint_fmm(&out_win, &seam, inpaint_radius)?;
    }

    let mut image = sample.image.clone();
    for y in 0..win_h {
        for x in 0..win_w {
            image.set(wx0 + x, wy0 + y, out_win.get(x, y));
        }
    }

    let mut lesion_masks = sample.lesion_masks.clone();
    let mut boxes = sample.boxes.clone();
    if let DeformTarget::Lesion(i) = target {
        let mut full = BinaryMask::empty(w, h)?;
        for y in 0..win_h {
            for x in 0..win_w {
                if warped_mask.get(x, y) {
                    full.set(wx0 + x, wy0 + y, true);
                }
            }
        }
        boxes[*i] = full.tight_bbox()?;
        lesion_masks[*i] = full;
    }
    Ok(AugmentSample {
        image,
        lesion_masks,
        boxes,
    })
}

/// Samples up to `count` disc-shaped lesion-free regions with centers on
/// breast tissue.
///
/// Each attempt draws a center uniformly from the breast pixels (in raster
/// order) and then a radius uniformly from `radius_range`; discs touching
/// any lesion are rejected. Attempts are bounded, so crowded images may
/// yield fewer regions than requested.
pub fn sample_non_mass_regions(
    breast: &BinaryMask,
    lesions: &[BinaryMask],
    count: usize,
    radius_range: (usize, usize),
    rng: &mut SplitMix64,
) -> Result<Vec<BinaryMask>> {
    if radius_range.0 == 0 || radius_range.0 > radius_range.1 {
        return Err(Error::param(format!(
            "radius range {:?} must satisfy 1 <= lo <= hi",
            radius_range
        )));
    }
    for (i, lesion) in lesions.iter().enumerate() {
        if lesion.width() != breast.width() || lesion.height() != breast.height() {
            return Err(Error::ShapeMismatch(format!(
                "lesion mask {i} is {}x{} but the breast mask is {}x{}",
                lesion.width(),
                lesion.height(),
                breast.width(),
                breast.height()
            )));
        }
    }
    let (w, h) = (breast.width(), breast.height());
    let centers: Vec<(usize, usize)> = (0..w * h)
        .filter(|&i| breast.bits()[i])
        .map(|i| (i % w, i / w))
        .collect();
    if centers.is_empty() {
        return Err(Error::EmptyMask);
    }

    const ATTEMPTS_PER_REGION: usize = 100;
    let mut regions = Vec::new();
    'outer: for _ in 0..count {
        for _ in 0..ATTEMPTS_PER_REGION {
            let (cx, cy) = centers[rng.next_below(centers.len() as u64) as usize];
            let radius = radius_range.0
                + rng.next_below((radius_range.1 - radius_range.0 + 1) as u64) as usize;
            let r = radius as i64;
            let mut disc = BinaryMask::empty(w, h)?;
            let mut clashes = false;
            'fill: for dy in -r..=r {
                for dx in -r..=r {
                    if dx * dx + dy * dy > r * r {
                        continue;
                    }
                    let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                    if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                        continue;
                    }
                    if lesions.iter().any(|l| l.get(x as usize, y as usize)) {
                        clashes = true;
                        break 'fill;
                    }
                    disc.set(x as usize, y as usize, true);
                }
            }
            if !clashes {
                regions.push(disc);
                continue 'outer;
            }
        }
        // This center count is exhausted; denser sampling will not succeed
        // for the remaining ones either, so stop early.
        break;
    }
    Ok(regions)
}

/// Parameter ranges for [`ClassicAugmentConfig::sample_with`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AugmentRanges {
    /// Rotation in degrees, both bounds inclusive.
    pub rotation_deg: (f64, f64),
    /// Translation per axis as a fraction of that axis' length.
    pub translate_frac: (f64, f64),
    /// Shear in degrees.
    pub shear_deg: (f64, f64),
    /// Isotropic scale factor.
    pub scale: (f64, f64),
    pub allow_hflip: bool,
    pub allow_vflip: bool,
}

impl Default for AugmentRanges {
    fn default() -> Self {
        AugmentRanges {
            rotation_deg: (-0.1, 0.1),
            translate_frac: (0.0, 0.1),
            shear_deg: (-0.1, 0.1),
            scale: (0.9, 1.1),
            allow_hflip: true,
            allow_vflip: true,
        }
    }
}

/// One concrete draw of classic geometric augmentation parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassicAugmentConfig {
    pub rotation_deg: f64,
    pub translate_x_frac: f64,
    pub translate_y_frac: f64,
    pub shear_deg: f64,
    pub scale: f64,
    pub hflip: bool,
    pub vflip: bool,
}

impl ClassicAugmentConfig {
    /// The do-nothing transform; [`classic_augment`] reproduces its input
    /// bit-exactly under it.
    pub fn identity() -> Self {
        ClassicAugmentConfig {
            rotation_deg: 0.0,
            translate_x_frac: 0.0,
            translate_y_frac: 0.0,
            shear_deg: 0.0,
            scale: 1.0,
            hflip: false,
            vflip: false,
        }
    }

    /// Draws one configuration from `ranges`, deterministically in `seed`.
    ///
    /// Draw order is fixed: rotation, x translation, y translation, shear,
    /// scale, horizontal flip, vertical flip.
    pub fn sample_with(seed: u64, ranges: &AugmentRanges) -> Self {
        let mut rng = SplitMix64::new(seed);
        ClassicAugmentConfig {
            rotation_deg: rng.uniform(ranges.rotation_deg.0, ranges.rotation_deg.1),
            translate_x_frac: rng.uniform(ranges.translate_frac.0, ranges.translate_frac.1),
            translate_y_frac: rng.uniform(ranges.translate_frac.0, ranges.translate_frac.1),
            shear_deg: rng.uniform(ranges.shear_deg.0, ranges.shear_deg.1),
            scale: rng.uniform(ranges.scale.0, ranges.scale.1),
            hflip: ranges.allow_hflip && rng.next_bool(),
            vflip: ranges.allow_vflip && rng.next_bool(),
        }
    }

    /// Draws one configuration from the default ranges.
    pub fn sample(seed: u64) -> Self {
        ClassicAugmentConfig::sample_with(seed, &AugmentRanges::default())
    }
}

/// Row-major 2x3 affine map `p -> A p + t`.
#[derive(Debug, Clone, Copy)]
struct Affine {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    tx: f64,
    ty: f64,
}

impl Affine {
    const IDENTITY: Affine = Affine {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    fn translation(tx: f64, ty: f64) -> Affine {
        Affine {
            tx,
            ty,
            ..Affine::IDENTITY
        }
    }

    /// `self` after `inner`: `(self . inner)(p) = self(inner(p))`.
    fn compose(&self, inner: &Affine) -> Affine {
        Affine {
            a: self.a * inner.a + self.b * inner.c,
            b: self.a * inner.b + self.b * inner.d,
            c: self.c * inner.a + self.d * inner.c,
            d: self.c * inner.b + self.d * inner.d,
            tx: self.a * inner.tx + self.b * inner.ty + self.tx,
            ty: self.c * inner.tx + self.d * inner.ty + self.ty,
        }
    }

    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.a * x + self.b * y + self.tx,
            self.c * x + self.d * y + self.ty,
        )
    }

    fn inverse(&self) -> Result<Affine> {
        let det = self.a * self.d - self.b * self.c;
        if det.abs() < 1e-12 {
            return Err(Error::param("transform is numerically singular"));
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Ok(Affine {
            a,
            b,
            c,
            d,
            tx: -(a * self.tx + b * self.ty),
            ty: -(c * self.tx + d * self.ty),
        })
    }
}

/// Builds the forward map for `cfg` on a `w` x `h` raster: centered scale,
/// shear, rotation, and flips, then translation in pixels.
fn forward_affine(cfg: &ClassicAugmentConfig, w: usize, h: usize) -> Affine {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let theta = cfg.rotation_deg.to_radians();
    let phi = cfg.shear_deg.to_radians();
    let rotate = Affine {
        a: theta.cos(),
        b: -theta.sin(),
        c: theta.sin(),
        d: theta.cos(),
        tx: 0.0,
        ty: 0.0,
    };
    let shear = Affine {
        a: 1.0,
        b: phi.tan(),
        c: 0.0,
        d: 1.0,
        tx: 0.0,
        ty: 0.0,
    };
    let scale = Affine {
        a: cfg.scale,
        b: 0.0,
        c: 0.0,
        d: cfg.scale,
        tx: 0.0,
        ty: 0.0,
    };
    let flip = Affine {
        a: if cfg.hflip { -1.0 } else { 1.0 },
        b: 0.0,
        c: 0.0,
        d: if cfg.vflip { -1.0 } else { 1.0 },
        tx: 0.0,
        ty: 0.0,
    };
    let centered = flip.compose(&rotate).compose(&shear).compose(&scale);
    Affine::translation(
        cx + cfg.translate_x_frac * w as f64,
        cy + cfg.translate_y_frac * h as f64,
    )
    .compose(&centered)
    .compose(&Affine::translation(-cx, -cy))
}

/// Applies one classic geometric transform to a sample.
///
/// The image is resampled bilinearly through the inverse map with border
/// replication; masks are resampled nearest-neighbor (off-frame sources
/// read background) and boxes recomputed as their tight bounds. A mask
/// pushed entirely out of frame fails rather than silently losing the
/// annotation.
pub fn classic_augment(
    sample: &AugmentSample,
    cfg: &ClassicAugmentConfig,
) -> Result<AugmentSample> {
    if !(cfg.scale.is_finite() && cfg.scale > 0.0) {
        return Err(Error::param(format!(
            "scale {} must be finite and positive",
            cfg.scale
        )));
    }
    let (w, h) = (sample.image.width(), sample.image.height());
    let backward = forward_affine(cfg, w, h).inverse()?;

    let mut pixels = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = backward.apply(x as f64, y as f64);
            pixels.push(crate::image::bilinear_sample(&sample.image, sx, sy));
        }
    }
    let image = FloatImage::new(w, h, pixels)?;

    let mut lesion_masks = Vec::with_capacity(sample.lesion_masks.len());
    let mut boxes = Vec::with_capacity(sample.lesion_masks.len());
    for mask in &sample.lesion_masks {
        let mut bits = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = backward.apply(x as f64, y as f64);
                let (rx, ry) = (sx.round(), sy.round());
                let inside = rx >= 0.0 && ry >= 0.0 && rx < w as f64 && ry < h as f64;
                bits.push(inside && mask.get(rx as usize, ry as usize));
            }
        }
        let out = BinaryMask::new(w, h, bits)?;
        let bbox = out
            .tight_bbox()
            .map_err(|_| Error::DeformationOutOfBounds)?;
        boxes.push(bbox);
        lesion_masks.push(out);
    }
    Ok(AugmentSample {
        image,
        lesion_masks,
        boxes,
    })
}

/// Short-side target for model-input resizing.
pub const RESIZE_SHORT_SIDE: i64 = 800;
/// Long-side cap that overrides the short-side target when binding.
pub const RESIZE_LONG_SIDE_CAP: i64 = 1333;

/// Picks the model-input scale for a `w` x `h` image: the short side is
/// brought to 800 px unless that would push the long side past 1333 px, in
/// which case the long side pins at 1333. Returns `(numerator,
/// denominator)` of the exact rational scale.
fn model_scale(w: usize, h: usize) -> (i64, i64) {
    let (short, long) = (w.min(h) as i64, w.max(h) as i64);
    if RESIZE_SHORT_SIDE * long <= RESIZE_LONG_SIDE_CAP * short {
        (RESIZE_SHORT_SIDE, short)
    } else {
        (RESIZE_LONG_SIDE_CAP, long)
    }
}

fn resample_bilinear(img: &FloatImage, out_w: usize, out_h: usize) -> Result<FloatImage> {
    let x_ratio = img.width() as f64 / out_w as f64;
    let y_ratio = img.height() as f64 / out_h as f64;
    let mut pixels = vec![0.0f64; out_w * out_h];
    crate::parallel::for_each_chunk(&mut pixels, out_w, |y, row| {
        let sy = (y as f64 + 0.5) * y_ratio - 0.5;
        for (x, slot) in row.iter_mut().enumerate() {
            let sx = (x as f64 + 0.5) * x_ratio - 0.5;
            *slot = crate::image::bilinear_sample(img, sx, sy);
        }
    });
    FloatImage::new(out_w, out_h, pixels)
}

/// Resizes an image (and its boxes) for model input and returns the scale
/// factor that was applied.
///
/// The governed side lands exactly on its target; the other side rounds
/// half-to-even. Box coordinates scale by the same factor, round
/// half-to-even, and are clamped to stay nonempty inside the new frame.
pub fn resize_for_model(img: &FloatImage, boxes: &[BBox]) -> Result<(FloatImage, Vec<BBox>, f64)> {
    let (w, h) = (img.width(), img.height());
    let (num, den) = model_scale(w, h);
    let scale = num as f64 / den as f64;
    let out_dim = |dim: usize| -> usize {
        (((dim as i64 * num) as f64 / den as f64).round_ties_even() as usize).max(1)
    };
    let (out_w, out_h) = (out_dim(w), out_dim(h));
    let resized = if (out_w, out_h) == (w, h) {
        img.clone()
    } else {
        resample_bilinear(img, out_w, out_h)?
    };

    let mut out_boxes = Vec::with_capacity(boxes.len());
    for b in boxes {
        let s = |v: i64| ((v as f64 * scale).round_ties_even()) as i64;
        let x_min = s(b.x_min).clamp(0, out_w as i64 - 1);
        let y_min = s(b.y_min).clamp(0, out_h as i64 - 1);
        let x_max = s(b.x_max).clamp(x_min + 1, out_w as i64);
        let y_max = s(b.y_max).clamp(y_min + 1, out_h as i64);
        out_boxes.push(BBox::new(x_min, y_min, x_max, y_max)?);
    }
    Ok((resized, out_boxes, scale))
}

/// Resizes a binary mask with nearest-neighbor sampling, using the same
/// center-aligned geometry as the bilinear image path so masks stay
/// registered with resized images.
pub fn resize_mask_nearest(mask: &BinaryMask, out_w: usize, out_h: usize) -> Result<BinaryMask> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::param("resize target must be at least 1x1"));
    }
    if (out_w, out_h) == (mask.width(), mask.height()) {
        return Ok(mask.clone());
    }
    let x_ratio = mask.width() as f64 / out_w as f64;
    let y_ratio = mask.height() as f64 / out_h as f64;
    let mut out = BinaryMask::empty(out_w, out_h)?;
    for y in 0..out_h {
        let sy = ((y as f64 + 0.5) * y_ratio - 0.5).round() as i64;
        let sy = sy.clamp(0, mask.height() as i64 - 1) as usize;
        for x in 0..out_w {
            let sx = ((x as f64 + 0.5) * x_ratio - 0.5).round() as i64;
            let sx = sx.clamp(0, mask.width() as i64 - 1) as usize;
            if mask.get(sx, sy) {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// [`resize_for_model`] for a three-channel image: all channels resample
/// with one shared scale so they stay registered.
pub fn resize_three_for_model(
    img: &ThreeChannelImage,
    boxes: &[BBox],
) -> Result<(ThreeChannelImage, Vec<BBox>, f64)> {
    let [c0, c1, c2] = img.channels();
    let (r0, out_boxes, scale) = resize_for_model(c0, boxes)?;
    let (out_w, out_h) = (r0.width(), r0.height());
    let resize_rest = |c: &FloatImage| -> Result<FloatImage> {
        if (out_w, out_h) == (c.width(), c.height()) {
            Ok(c.clone())
        } else {
            resample_bilinear(c, out_w, out_h)
        }
    };
    let resized = ThreeChannelImage::new(r0, resize_rest(c1)?, resize_rest(c2)?)?;
    Ok((resized, out_boxes, scale))
}
