//! Fast-marching inpainting for small seam holes.
//!
//! Hole pixels are filled in order of increasing distance from the hole
//! boundary, where distance is the fast-marching solution of the eikonal
//! equation `|grad T| = 1` with `T = 0` on the known region. Each pixel is
//! painted as a weighted average of the already-known pixels inside a disc
//! around it; weights combine a direction factor (alignment with the
//! marching front's normal), an inverse-square distance factor, and a
//! level-set proximity factor. The holes this crate produces are narrow
//! seam bands, so the classic image-gradient transport term is omitted —
//! the weighted average alone propagates surrounding texture smoothly.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::image::{BinaryMask, FloatImage};

/// Heap entry ordered so the smallest `(t, idx)` pops first; the index
/// tie-break keeps traversal order fully deterministic.
struct Candidate {
    t: f64,
    idx: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap and we need the nearest pixel.
        other
            .t
            .total_cmp(&self.t)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Fills `hole` pixels of `img` by fast-marching inpainting with the given
/// neighborhood radius (pixels, >= 1).
///
/// Pixels outside the hole are returned bit-exactly unchanged, and every
/// filled value is a convex combination of known values, so the output
/// range never exceeds the known range. An empty hole returns a plain
/// copy; a hole covering the whole image has no boundary to march from and
/// fails.
pub fn inpaint_fmm(img: &FloatImage, hole: &BinaryMask, radius: usize) -> Result<FloatImage> {
    if img.width() != hole.width() || img.height() != hole.height() {
        return Err(Error::ShapeMismatch(format!(
            "image {}x{} vs hole {}x{}",
            img.width(),
            img.height(),
            hole.width(),
            hole.height()
        )));
    }
    if radius == 0 {
        return Err(Error::param("inpaint radius must be >= 1"));
    }
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    if hole.count() == 0 {
        return Ok(img.clone());
    }
    if hole.count() == n {
        return Err(Error::NoBoundary);
    }

    let mut known: Vec<bool> = hole.bits().iter().map(|b| !b).collect();
    let mut t: Vec<f64> = known
        .iter()
        .map(|k| if *k { 0.0 } else { f64::INFINITY })
        .collect();
    let mut values: Vec<f64> = img.pixels().to_vec();

    let neighbors4 = |idx: usize| {
        let (x, y) = (idx % w, idx / w);
        let mut out = [usize::MAX; 4];
        if x > 0 {
            out[0] = idx - 1;
        }
        if x + 1 < w {
            out[1] = idx + 1;
        }
        if y > 0 {
            out[2] = idx - w;
        }
        if y + 1 < h {
            out[3] = idx + w;
        }
        out
    };

    // Quadratic eikonal update from the finalized axis neighbors.
    let solve = |idx: usize, known: &[bool], t: &[f64]| -> f64 {
        let (x, y) = (idx % w, idx / w);
        let axis_min = |a: usize, b: usize, has_a: bool, has_b: bool| -> Option<f64> {
            let mut best = f64::INFINITY;
            if has_a && known[a] {
                best = best.min(t[a]);
            }
            if has_b && known[b] {
                best = best.min(t[b]);
            }
            if best.is_finite() {
                Some(best)
            } else {
                None
            }
        };
        let tx = axis_min(idx.wrapping_sub(1), idx + 1, x > 0, x + 1 < w);
        let ty = axis_min(idx.wrapping_sub(w), idx + w, y > 0, y + 1 < h);
        match (tx, ty) {
            (Some(a), Some(b)) => {
                if (a - b).abs() < 1.0 {
                    (a + b + (2.0 - (a - b) * (a - b)).sqrt()) / 2.0
                } else {
                    a.min(b) + 1.0
                }
            }
            (Some(v), None) | (None, Some(v)) => v + 1.0,
            (None, None) => f64::INFINITY,
        }
    };

    let offsets: Vec<(i64, i64)> = {
        let r = radius as i64;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx, dy) != (0, 0) && dx * dx + dy * dy <= r * r {
                    out.push((dx, dy));
                }
            }
        }
        out
    };

    let mut heap = BinaryHeap::new();
    for idx in 0..n {
        if !known[idx] && neighbors4(idx).iter().any(|&q| q != usize::MAX && known[q]) {
            t[idx] = solve(idx, &known, &t);
            heap.push(Candidate { t: t[idx], idx });
        }
    }

    while let Some(Candidate { idx, .. }) = heap.pop() {
        if known[idx] {
            continue; // stale entry superseded by an earlier, nearer pop
        }
        values[idx] = paint(idx, w, h, &offsets, &known, &t, &values);
        known[idx] = true;
        for q in neighbors4(idx) {
            if q != usize::MAX && !known[q] && hole.bits()[q] {
                let tq = solve(q, &known, &t);
                if tq < t[q] {
                    t[q] = tq;
                    heap.push(Candidate { t: tq, idx: q });
                }
            }
        }
    }

    FloatImage::new(w, h, values)
}

/// Weighted average of the known pixels within the disc around `idx`.
#[allow(clippy::too_many_arguments)]
fn paint(
    idx: usize,
    w: usize,
    h: usize,
    offsets: &[(i64, i64)],
    known: &[bool],
    t: &[f64],
    values: &[f64],
) -> f64 {
    let (px, py) = ((idx % w) as i64, (idx / w) as i64);
    let t_p = t[idx];

    // Front normal: finite-difference gradient of T using finalized
    // neighbors, falling back to an isotropic weight when none exist.
    let axis_grad = |minus: Option<usize>, plus: Option<usize>| -> f64 {
        let m = minus.filter(|&q| known[q]).map(|q| t[q]);
        let p = plus.filter(|&q| known[q]).map(|q| t[q]);
        match (m, p) {
            (Some(a), Some(b)) => (b - a) / 2.0,
            (Some(a), None) => t_p - a,
            (None, Some(b)) => b - t_p,
            (None, None) => 0.0,
        }
    };
    let gx = axis_grad(
        (px > 0).then(|| idx - 1),
        (px + 1 < w as i64).then(|| idx + 1),
    );
    let gy = axis_grad(
        (py > 0).then(|| idx - w),
        (py + 1 < h as i64).then(|| idx + w),
    );
    let grad_len = (gx * gx + gy * gy).sqrt();

    let mut num = 0.0;
    let mut den = 0.0;
    for &(ox, oy) in offsets {
        let (qx, qy) = (px + ox, py + oy);
        if qx < 0 || qy < 0 || qx >= w as i64 || qy >= h as i64 {
            continue;
        }
        let q = qy as usize * w + qx as usize;
        if !known[q] {
            continue;
        }
        let (rx, ry) = ((px - qx) as f64, (py - qy) as f64);
        let len2 = rx * rx + ry * ry;
        let len = len2.sqrt();
        let dir = if grad_len > 0.0 {
            ((rx * gx + ry * gy).abs() / (len * grad_len)).max(1e-6)
        } else {
            1.0
        };
        let dst = 1.0 / len2;
        let lev = 1.0 / (1.0 + (t[q] - t_p).abs());
        let weight = dir * dst * lev;
        num += weight * values[q];
        den += weight;
    }
    debug_assert!(
        den > 0.0,
        "marching order guarantees a known neighbor in range"
    );
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_image(w: usize, h: usize, seed: u64) -> FloatImage {
        let mut rng = SplitMix64::new(seed);
        FloatImage::new(w, h, (0..w * h).map(|_| rng.next_f64()).collect()).unwrap()
    }

    fn blob_hole(w: usize, h: usize, cx: i64, cy: i64, r: i64) -> BinaryMask {
        let mut mask = BinaryMask::empty(w, h).unwrap();
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r {
                    mask.set(x as usize, y as usize, true);
                }
            }
        }
        mask
    }

    #[test]
    fn empty_hole_returns_exact_copy() {
        let img = random_image(24, 18, 1);
        let hole = BinaryMask::empty(24, 18).unwrap();
        assert_eq!(inpaint_fmm(&img, &hole, 3).unwrap(), img);
    }

    #[test]
    fn full_hole_has_no_boundary() {
        let img = random_image(8, 8, 2);
        let hole = BinaryMask::new(8, 8, vec![true; 64]).unwrap();
        assert!(matches!(
            inpaint_fmm(&img, &hole, 3),
            Err(Error::NoBoundary)
        ));
    }

    #[test]
    fn zero_radius_is_rejected() {
        let img = random_image(8, 8, 3);
        let hole = blob_hole(8, 8, 4, 4, 2);
        assert!(matches!(
            inpaint_fmm(&img, &hole, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let img = random_image(8, 8, 4);
        let hole = BinaryMask::empty(9, 8).unwrap();
        assert!(matches!(
            inpaint_fmm(&img, &hole, 3),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn pixels_outside_hole_are_untouched() {
        for seed in 0..10 {
            let img = random_image(40, 32, seed);
            let hole = blob_hole(40, 32, 13 + seed as i64 % 11, 16, 5);
            let out = inpaint_fmm(&img, &hole, 3).unwrap();
            for y in 0..32 {
                for x in 0..40 {
                    if !hole.get(x, y) {
                        assert_eq!(out.get(x, y), img.get(x, y), "seed {seed} pixel ({x},{y})");
                    }
                }
            }
        }
    }

    #[test]
    fn filled_values_stay_within_known_range() {
        let img = random_image(32, 32, 9);
        let hole = blob_hole(32, 32, 16, 16, 6);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..32 * 32 {
            if !hole.bits()[i] {
                lo = lo.min(img.pixels()[i]);
                hi = hi.max(img.pixels()[i]);
            }
        }
        let out = inpaint_fmm(&img, &hole, 3).unwrap();
        for i in 0..32 * 32 {
            if hole.bits()[i] {
                let v = out.pixels()[i];
                assert!(
                    v >= lo - 1e-12 && v <= hi + 1e-12,
                    "fill {v} escapes [{lo}, {hi}]"
                );
            }
        }
    }

    #[test]
    fn constant_image_fills_to_the_same_constant() {
        let img = FloatImage::filled(24, 24, 0.375).unwrap();
        let hole = blob_hole(24, 24, 12, 12, 5);
        let out = inpaint_fmm(&img, &hole, 4).unwrap();
        for (i, v) in out.pixels().iter().enumerate() {
            assert!((v - 0.375).abs() <= 1e-12, "pixel {i} drifted to {v}");
        }
    }

    #[test]
    fn narrow_slit_in_ramp_reconstructs_closely() {
        // Horizontal ramp 0..=1; a two-column slit is cut and refilled.
        // Both sides carry the gradient, so errors stay well under 5%.
        let (w, h) = (64usize, 32usize);
        let ramp = FloatImage::new(
            w,
            h,
            (0..w * h)
                .map(|i| (i % w) as f64 / (w - 1) as f64)
                .collect(),
        )
        .unwrap();
        let mut hole = BinaryMask::empty(w, h).unwrap();
        for y in 0..h {
            hole.set(30, y, true);
            hole.set(31, y, true);
        }
        let out = inpaint_fmm(&ramp, &hole, 3).unwrap();
        let mut worst = 0.0f64;
        for y in 0..h {
            for x in 30..=31 {
                worst = worst.max((out.get(x, y) - ramp.get(x, y)).abs());
            }
        }
        assert!(
            worst <= 0.05,
            "worst slit error {worst} exceeds 5% of range"
        );
    }

    #[test]
    fn result_is_deterministic() {
        let img = random_image(32, 24, 11);
        let hole = blob_hole(32, 24, 15, 12, 5);
        let a = inpaint_fmm(&img, &hole, 3).unwrap();
        let b = inpaint_fmm(&img, &hole, 3).unwrap();
        assert_eq!(a, b);
    }
}
