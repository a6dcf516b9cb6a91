//! Low-level image operations: smoothing, thresholding, morphology and
//! connected components.
//!
//! These are the primitives the preprocessing and augmentation stages are
//! built from. They favor predictable, exactly specified behavior over raw
//! throughput: borders are replicated, kernels are truncated at a fixed
//! multiple of sigma, and every tie-break is deterministic.

use crate::error::{Error, Result};
use crate::image::{BinaryMask, FloatImage, GrayImage};
use crate::parallel::for_each_chunk;

/// Number of standard deviations at which the Gaussian kernel is truncated.
const KERNEL_TRUNCATION_SIGMAS: f64 = 3.0;

/// Normalized 1-D Gaussian kernel of radius `ceil(3 * sigma)`.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (KERNEL_TRUNCATION_SIGMAS * sigma).ceil() as i64;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= sum;
    }
    kernel
}

/// Separable Gaussian blur over a raw `f64` buffer with replicated borders.
fn blur_buffer(src: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as i64;

    // Horizontal pass: each output row depends only on its own input row.
    let mut horiz = vec![0.0f64; src.len()];
    for_each_chunk(&mut horiz, width, |y, row| {
        let src_row = &src[y * width..(y + 1) * width];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &w) in kernel.iter().enumerate() {
                let sx = (x as i64 + ki as i64 - radius).clamp(0, width as i64 - 1) as usize;
                acc += w * src_row[sx];
            }
            *out = acc;
        }
    });

    // Vertical pass: rows are written disjointly, reads span the column.
    let mut out = vec![0.0f64; src.len()];
    for_each_chunk(&mut out, width, |y, row| {
        for (x, out_px) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, &w) in kernel.iter().enumerate() {
                let sy = (y as i64 + ki as i64 - radius).clamp(0, height as i64 - 1) as usize;
                acc += w * horiz[sy * width + x];
            }
            *out_px = acc;
        }
    });
    out
}

fn validate_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::param(format!(
            "sigma {sigma} must be finite and positive"
        )));
    }
    Ok(())
}

/// Gaussian-smooths an integer image.
///
/// The kernel is truncated at `ceil(3 * sigma)` and renormalized; borders
/// replicate the edge pixel. The result is rounded to the nearest integer
/// intensity at the same bit depth, so a constant image passes through
/// unchanged and the mean intensity is preserved up to rounding.
pub fn gaussian_filter(img: &GrayImage, sigma: f64) -> Result<GrayImage> {
    validate_sigma(sigma)?;
    let blurred = blur_buffer(&img.to_f64(), img.width(), img.height(), sigma);
    let max = img.max_value() as f64;
    let pixels = blurred
        .iter()
        .map(|&v| v.round().clamp(0.0, max) as u16)
        .collect();
    GrayImage::new(img.width(), img.height(), img.bit_depth(), pixels)
}

/// Gaussian-smooths a floating-point image without any rounding.
pub fn gaussian_filter_float(img: &FloatImage, sigma: f64) -> Result<FloatImage> {
    validate_sigma(sigma)?;
    let blurred = blur_buffer(img.pixels(), img.width(), img.height(), sigma);
    FloatImage::new(img.width(), img.height(), blurred)
}

/// Number of histogram bins used for threshold selection. Images deeper
/// than 8 bits are quantized down to this resolution first.
pub const OTSU_BINS: usize = 256;

/// Between-class variance score for a histogram split after bin `t`,
/// up to a constant factor of `1 / n^2`.
///
/// `cum`/`m` are the zeroth and first moments of bins `0..=t`; `n`/`m_total`
/// are the totals. Moments are carried as exact integers so the score is a
/// deterministic function of the histogram alone.
fn between_class_score(cum: u64, m: u64, n: u64, m_total: u64) -> f64 {
    if cum == 0 || cum == n {
        return 0.0;
    }
    let num = (m as i128) * (n as i128) - (m_total as i128) * (cum as i128);
    let num = num as f64;
    let den = (cum as f64) * ((n - cum) as f64);
    num * num / den
}

/// Otsu's threshold over a 256-bin intensity histogram.
///
/// Returns the threshold `t`, expressed in the image's own intensity range,
/// that maximizes the between-class variance; pixels strictly greater than
/// `t` are foreground. When several thresholds tie (for instance across a
/// run of empty bins), the smallest is returned. A histogram with fewer
/// than two occupied bins has no two-class split and is rejected.
pub fn otsu_threshold(img: &GrayImage) -> Result<u16> {
    let shift = img.bit_depth() - 8; // 0 for 8-bit, 8 for 16-bit
    let mut hist = [0u64; OTSU_BINS];
    for &p in img.pixels() {
        hist[(p >> shift) as usize] += 1;
    }
    otsu_from_histogram(&hist).map(|t_bin| ((t_bin as u16 + 1) << shift) - 1)
}

/// Threshold-bin selection shared by [`otsu_threshold`] and the tests.
pub(crate) fn otsu_from_histogram(hist: &[u64; OTSU_BINS]) -> Result<usize> {
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let n: u64 = hist.iter().sum();
    let m_total: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut best_t = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    let mut cum = 0u64;
    let mut m = 0u64;
    for (t, &count) in hist.iter().enumerate().take(OTSU_BINS - 1) {
        cum += count;
        m += t as u64 * count;
        let score = between_class_score(cum, m, n, m_total);
        // Strict comparison keeps the smallest maximizing threshold.
        if score > best_score {
            best_score = score;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Extracts the largest 8-connected foreground component of a mask.
///
/// Components tie on size in favor of the one whose first pixel comes
/// earliest in raster (row-major) order. Errors if the mask is empty.
pub fn largest_connected_component(mask: &BinaryMask) -> Result<BinaryMask> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    // 0 = unlabeled; component ids start at 1.
    let mut labels = vec![0u32; bits.len()];
    let mut best_id = 0u32;
    let mut best_size = 0usize;
    let mut next_id = 1u32;
    let mut stack = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        // In a raster scan the seed is the component's earliest pixel, so
        // "first strict maximum wins" implements the documented tie-break.
        let id = next_id;
        next_id += 1;
        let mut size = 0usize;
        labels[start] = id;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            size += 1;
            let (x, y) = (idx % w, idx / w);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let nidx = ny as usize * w + nx as usize;
                    if bits[nidx] && labels[nidx] == 0 {
                        labels[nidx] = id;
                        stack.push(nidx);
                    }
                }
            }
        }
        if size > best_size {
            best_size = size;
            best_id = id;
        }
    }

    if best_id == 0 {
        return Err(Error::EmptyMask);
    }
    BinaryMask::new(w, h, labels.iter().map(|&l| l == best_id).collect())
}

/// Offsets of the disc structuring element of the given radius:
/// all `(dx, dy)` with `dx^2 + dy^2 <= radius^2`.
fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

/// Morphological dilation by a disc of the given radius.
///
/// Radius 0 is the identity. Radius 1 uses the 4-neighborhood plus the
/// center (the only integer offsets within distance 1).
pub fn dilate(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = (mask.width(), mask.height());
    let offsets = disc_offsets(radius);
    let mut out = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                    out[ny as usize * w + nx as usize] = true;
                }
            }
        }
    }
    BinaryMask::new(w, h, out).expect("dimensions preserved")
}
