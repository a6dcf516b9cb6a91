//! Contrast-limited adaptive histogram equalization (CLAHE) and
//! three-channel synthesis.
//!
//! The detector consumes RGB input, so a normalized single-channel image is
//! expanded into three views of the same tissue: the unenhanced image plus
//! two CLAHE variants at different clip limits. Weak enhancement brings out
//! mass boundaries; stronger enhancement brings out internal texture.
//!
//! # Mapping convention
//!
//! Each tile's histogram (`bins` buckets over `[0, 1]`) is clipped at
//! `clip_limit * tile_pixel_count` and the clipped excess is spread
//! uniformly over all bins in a single pass (bins may end up slightly above
//! the cap again; there is no re-clipping loop). The remapping function is
//! the *midpoint* cumulative distribution,
//! `lut[b] = (cdf[b] - h[b] / 2) / tile_pixel_count`,
//! which sends each bin of a fully flattened histogram to its own center.
//! Consequently, as the clip limit approaches its minimum feasible value
//! the transform approaches the identity map, and equalizing an image twice
//! is close to equalizing it once. Pixels are remapped by bilinear
//! interpolation between the four nearest tile mappings, with the blend
//! collapsing toward the single nearest tile at the image border.

use crate::error::{Error, Result};
use crate::image::FloatImage;
use crate::parallel::{for_each_chunk, map_indexed};

/// Clip limits for the two enhanced channels produced by
/// [`synthesize_channels`]: a gentle and a stronger enhancement.
pub const CHANNEL_CLIP_LIMITS: [f64; 2] = [0.01, 0.02];

/// CLAHE tiling and clipping parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClaheConfig {
    /// Tile grid columns.
    pub tiles_x: usize,
    /// Tile grid rows.
    pub tiles_y: usize,
    /// Histogram cap as a fraction of the tile pixel count, in `(0, 1]`.
    /// `clip_limit * tile_pixel_count` must be at least one count.
    pub clip_limit: f64,
    /// Histogram resolution over `[0, 1]`.
    pub bins: usize,
}

impl Default for ClaheConfig {
    fn default() -> Self {
        ClaheConfig {
            tiles_x: 8,
            tiles_y: 8,
            clip_limit: CHANNEL_CLIP_LIMITS[0],
            bins: 256,
        }
    }
}

impl ClaheConfig {
    fn validate(&self) -> Result<()> {
        if self.tiles_x == 0 || self.tiles_y == 0 {
            return Err(Error::param("tile grid must be at least 1x1"));
        }
        if self.bins < 2 {
            return Err(Error::param(format!(
                "{} histogram bins cannot separate levels",
                self.bins
            )));
        }
        if !self.clip_limit.is_finite() || self.clip_limit <= 0.0 || self.clip_limit > 1.0 {
            return Err(Error::param(format!(
                "clip limit {} must lie in (0, 1]",
                self.clip_limit
            )));
        }
        Ok(())
    }
}

/// Boundary of tile `i` of `t` tiles over an axis of length `len`:
/// tile `i` covers `[edge(i), edge(i+1))`.
#[inline]
fn tile_edge(i: usize, t: usize, len: usize) -> usize {
    i * len / t
}

/// Clipped, redistributed, midpoint-cumulative remap table for one tile.
fn tile_lut(img: &FloatImage, cfg: &ClaheConfig, tx: usize, ty: usize) -> Vec<f64> {
    let (x0, x1) = (
        tile_edge(tx, cfg.tiles_x, img.width()),
        tile_edge(tx + 1, cfg.tiles_x, img.width()),
    );
    let (y0, y1) = (
        tile_edge(ty, cfg.tiles_y, img.height()),
        tile_edge(ty + 1, cfg.tiles_y, img.height()),
    );
    let n = ((x1 - x0) * (y1 - y0)) as f64;

    let mut hist = vec![0.0f64; cfg.bins];
    for y in y0..y1 {
        for x in x0..x1 {
            hist[bin_of(img.get(x, y), cfg.bins)] += 1.0;
        }
    }

    // Clip and redistribute the excess uniformly (single pass).
    let cap = cfg.clip_limit * n;
    let mut excess = 0.0;
    for h in &mut hist {
        if *h > cap {
            excess += *h - cap;
            *h = cap;
        }
    }
    let share = excess / cfg.bins as f64;

    // Midpoint cumulative mapping.
    let mut lut = Vec::with_capacity(cfg.bins);
    let mut cum = 0.0;
    for &h in &hist {
        let count = h + share;
        lut.push((cum + count / 2.0) / n);
        cum += count;
    }
    lut
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    ((v * bins as f64) as usize).min(bins - 1)
}

/// Exact for equal endpoints: `lerp(a, a, t) == a`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Contrast-limited adaptive histogram equalization over `[0, 1]` images.
///
/// Requires every pixel in `[0, 1]`, an image at least as large as the tile
/// grid, and a clip limit granting each tile histogram at least one count
/// (`clip_limit * tile_pixel_count >= 1`). Output values stay within
/// `[0, 1]`; the remap applied at any fixed position is monotone in the
/// input value; and a constant image comes out constant.
pub fn clahe(img: &FloatImage, cfg: &ClaheConfig) -> Result<FloatImage> {
    cfg.validate()?;
    if img.width() < cfg.tiles_x || img.height() < cfg.tiles_y {
        return Err(Error::param(format!(
            "{}x{} image cannot host a {}x{} tile grid",
            img.width(),
            img.height(),
            cfg.tiles_x,
            cfg.tiles_y
        )));
    }
    if img.pixels().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(Error::param("image values must lie in [0, 1]"));
    }
    // The smallest tile constrains the feasible clip limit.
    let min_tile_w = (0..cfg.tiles_x)
        .map(|i| {
            tile_edge(i + 1, cfg.tiles_x, img.width()) - tile_edge(i, cfg.tiles_x, img.width())
        })
        .min()
        .unwrap();
    let min_tile_h = (0..cfg.tiles_y)
        .map(|i| {
            tile_edge(i + 1, cfg.tiles_y, img.height()) - tile_edge(i, cfg.tiles_y, img.height())
        })
        .min()
        .unwrap();
    if cfg.clip_limit * ((min_tile_w * min_tile_h) as f64) < 1.0 {
        return Err(Error::param(format!(
            "clip limit {} allows under one count for {}x{} tiles",
            cfg.clip_limit, min_tile_w, min_tile_h
        )));
    }

    let luts = map_indexed(cfg.tiles_x * cfg.tiles_y, |t| {
        tile_lut(img, cfg, t % cfg.tiles_x, t / cfg.tiles_x)
    });

    let (w, h) = (img.width(), img.height());
    let (tiles_x, tiles_y, bins) = (cfg.tiles_x, cfg.tiles_y, cfg.bins);
    let mut out = vec![0.0f64; w * h];
    for_each_chunk(&mut out, w, |y, row| {
        // Fractional position of this row between vertical tile centers.
        let sy = (y as f64 + 0.5) * tiles_y as f64 / h as f64 - 0.5;
        let ty0 = sy.floor();
        let fy = sy - ty0;
        let ty0 = (ty0 as i64).clamp(0, tiles_y as i64 - 1) as usize;
        let ty1 = (ty0 + 1).min(tiles_y - 1);
        for (x, out_px) in row.iter_mut().enumerate() {
            let sx = (x as f64 + 0.5) * tiles_x as f64 / w as f64 - 0.5;
            let tx0 = sx.floor();
            let fx = sx - tx0;
            let tx0 = (tx0 as i64).clamp(0, tiles_x as i64 - 1) as usize;
            let tx1 = (tx0 + 1).min(tiles_x - 1);
            let b = bin_of(img.get(x, y), bins);
            let top = lerp(
                luts[ty0 * tiles_x + tx0][b],
                luts[ty0 * tiles_x + tx1][b],
                fx,
            );
            let bottom = lerp(
                luts[ty1 * tiles_x + tx0][b],
                luts[ty1 * tiles_x + tx1][b],
                fx,
            );
            *out_px = lerp(top, bottom, fy);
        }
    });
    FloatImage::new(w, h, out)
}

/// A three-plane image; planes share dimensions and live in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeChannelImage {
    channels: [FloatImage; 3],
}

impl ThreeChannelImage {
    pub fn new(c0: FloatImage, c1: FloatImage, c2: FloatImage) -> Result<Self> {
        if c0.width() != c1.width()
            || c0.height() != c1.height()
            || c0.width() != c2.width()
            || c0.height() != c2.height()
        {
            return Err(Error::ShapeMismatch(
                "three-channel planes differ in size".into(),
            ));
        }
        Ok(ThreeChannelImage {
            channels: [c0, c1, c2],
        })
    }

    pub fn width(&self) -> usize {
        self.channels[0].width()
    }

    pub fn height(&self) -> usize {
        self.channels[0].height()
    }

    /// Planes in output order: unenhanced, gentle CLAHE, strong CLAHE.
    pub fn channels(&self) -> &[FloatImage; 3] {
        &self.channels
    }
}

/// Expands a normalized image into the detector's three input channels
/// using the default tile grid: the image itself, CLAHE at clip limit
/// 0.01, and CLAHE at clip limit 0.02 (channel order R, G, B on export).
pub fn synthesize_channels(norm: &FloatImage) -> Result<ThreeChannelImage> {
    synthesize_channels_with(norm, &ClaheConfig::default())
}

/// [`synthesize_channels`] with explicit tiling; `base.clip_limit` is
/// ignored in favor of the fixed per-channel limits.
pub fn synthesize_channels_with(
    norm: &FloatImage,
    base: &ClaheConfig,
) -> Result<ThreeChannelImage> {
    let gentle = clahe(
        norm,
        &ClaheConfig {
            clip_limit: CHANNEL_CLIP_LIMITS[0],
            ..*base
        },
    )?;
    let strong = clahe(
        norm,
        &ClaheConfig {
            clip_limit: CHANNEL_CLIP_LIMITS[1],
            ..*base
        },
    )?;
    ThreeChannelImage::new(norm.clone(), gentle, strong)
}
