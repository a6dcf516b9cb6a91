//! Image file input/output.
//!
//! Supported interchange formats:
//! - PGM (`P5` binary): 8-bit, or 16-bit stored big-endian per the format
//!   specification.
//! - PNG: 8- and 16-bit grayscale, plus 8-bit RGB for three-channel output.
//! - Masks: 8-bit grayscale files holding 0 for background and 255 for
//!   foreground. Any nonzero value reads back as foreground.
//! - Normalized floating-point images persist as 16-bit grayscale PNG with
//!   values scaled by 65535 and rounded.
//!
//! Format is chosen by file extension (`.pgm` / `.png`), case-insensitive.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use image::{ImageBuffer, Luma, Rgb};

use crate::enhance::ThreeChannelImage;
use crate::error::{Error, Result};
use crate::image::{BinaryMask, FloatImage, GrayImage};

/// Reads an 8- or 16-bit grayscale image, dispatching on the extension.
pub fn read_gray(path: &Path) -> Result<GrayImage> {
    match extension_of(path)?.as_str() {
        "pgm" => read_pgm(path),
        "png" => read_gray_png(path),
        other => Err(Error::param(format!(
            "unsupported image extension .{other}"
        ))),
    }
}

/// Writes an 8- or 16-bit grayscale image, dispatching on the extension.
pub fn write_gray(path: &Path, img: &GrayImage) -> Result<()> {
    match extension_of(path)?.as_str() {
        "pgm" => write_pgm(path, img),
        "png" => write_gray_png(path, img),
        other => Err(Error::param(format!(
            "unsupported image extension .{other}"
        ))),
    }
}

fn extension_of(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .ok_or_else(|| Error::param(format!("{} has no file extension", path.display())))
}

// ---------------------------------------------------------------- PGM (P5)

/// Parses a binary PGM file. `maxval` up to 255 reads as 8-bit; larger
/// `maxval` reads as 16-bit from big-endian byte pairs.
pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path)?;
    let mut cursor = 0usize;

    let magic = next_header_token(&data, &mut cursor)
        .ok_or_else(|| Error::param("PGM header truncated"))?;
    if magic != b"P5" {
        return Err(Error::param(format!(
            "not a binary PGM: magic {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut fields = [0usize; 3];
    for field in &mut fields {
        let tok = next_header_token(&data, &mut cursor)
            .ok_or_else(|| Error::param("PGM header truncated"))?;
        *field = std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::param("PGM header field is not a number"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > u16::MAX as usize {
        return Err(Error::param(format!("PGM maxval {maxval} out of range")));
    }
    // Header tokens are followed by exactly one whitespace byte, already
    // consumed by the tokenizer; pixel data starts at `cursor`.
    let raster = &data[cursor.min(data.len())..];
    let n = width * height;
    let (bit_depth, pixels) = if maxval <= u8::MAX as usize {
        if raster.len() < n {
            return Err(Error::param("PGM pixel data truncated"));
        }
        (8u8, raster[..n].iter().map(|&b| b as u16).collect())
    } else {
        if raster.len() < 2 * n {
            return Err(Error::param("PGM pixel data truncated"));
        }
        let px = raster[..2 * n]
            .chunks_exact(2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]))
            .collect();
        (16u8, px)
    };
    GrayImage::new(width, height, bit_depth, pixels)
}

/// Reads one whitespace-delimited header token, skipping `#` comments.
/// Advances the cursor past the single whitespace byte that terminates the
/// token.
fn next_header_token<'a>(data: &'a [u8], cursor: &mut usize) -> Option<&'a [u8]> {
    // Skip whitespace and comment lines.
    loop {
        while *cursor < data.len() && data[*cursor].is_ascii_whitespace() {
            *cursor += 1;
        }
        if *cursor < data.len() && data[*cursor] == b'#' {
            while *cursor < data.len() && data[*cursor] != b'\n' {
                *cursor += 1;
            }
        } else {
            break;
        }
    }
    if *cursor >= data.len() {
        return None;
    }
    let start = *cursor;
    while *cursor < data.len() && !data[*cursor].is_ascii_whitespace() {
        *cursor += 1;
    }
    let tok = &data[start..*cursor];
    if *cursor < data.len() {
        *cursor += 1; // the single whitespace terminator
    }
    Some(tok)
}

/// Writes a binary PGM file; 16-bit images use big-endian byte pairs and
/// maxval 65535.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let maxval: u32 = img.max_value() as u32;
    write!(out, "P5\n{} {}\n{}\n", img.width(), img.height(), maxval)?;
    if img.bit_depth() == 8 {
        let bytes: Vec<u8> = img.pixels().iter().map(|&p| p as u8).collect();
        out.write_all(&bytes)?;
    } else {
        let mut bytes = Vec::with_capacity(img.pixels().len() * 2);
        for &p in img.pixels() {
            bytes.extend_from_slice(&p.to_be_bytes());
        }
        out.write_all(&bytes)?;
    }
    out.flush()?;
    Ok(())
}

// -------------------------------------------------------------------- PNG

fn read_gray_png(path: &Path) -> Result<GrayImage> {
    let dynamic = image::open(path)?;
    match dynamic {
        image::DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            GrayImage::new(
                w,
                h,
                8,
                buf.into_raw().into_iter().map(|b| b as u16).collect(),
            )
        }
        image::DynamicImage::ImageLuma16(buf) => {
            let (w, h) = (buf.width() as usize, buf.height() as usize);
            GrayImage::new(w, h, 16, buf.into_raw())
        }
        other => Err(Error::param(format!(
            "{}: expected grayscale PNG, found {:?} pixels",
            path.display(),
            other.color()
        ))),
    }
}

fn write_gray_png(path: &Path, img: &GrayImage) -> Result<()> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    if img.bit_depth() == 8 {
        let raw: Vec<u8> = img.pixels().iter().map(|&p| p as u8).collect();
        let buf: ImageBuffer<Luma<u8>, _> =
            ImageBuffer::from_raw(w, h, raw).expect("buffer sized to dimensions");
        buf.save(path)?;
    } else {
        let buf: ImageBuffer<Luma<u16>, _> =
            ImageBuffer::from_raw(w, h, img.pixels().to_vec()).expect("buffer sized to dimensions");
        buf.save(path)?;
    }
    Ok(())
}

// ------------------------------------------------------------------ masks

/// Reads a binary mask from an 8-bit grayscale file; nonzero = foreground.
pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    let img = read_gray(path)?;
    if img.bit_depth() != 8 {
        return Err(Error::param(format!(
            "{}: masks must be 8-bit",
            path.display()
        )));
    }
    BinaryMask::new(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&p| p != 0).collect(),
    )
}

/// Writes a binary mask as an 8-bit file with 0/255 values.
pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    let pixels = mask
        .bits()
        .iter()
        .map(|&b| if b { 255 } else { 0 })
        .collect();
    let img = GrayImage::new(mask.width(), mask.height(), 8, pixels)?;
    write_gray(path, &img)
}

// ------------------------------------------------- normalized float images

/// Reads a grayscale PNG/PGM into `[0, 1]` by dividing by the depth maximum.
pub fn read_float(path: &Path) -> Result<FloatImage> {
    let img = read_gray(path)?;
    let max = img.max_value() as f64;
    FloatImage::new(
        img.width(),
        img.height(),
        img.pixels().iter().map(|&p| p as f64 / max).collect(),
    )
}

/// Writes a `[0, 1]` image as 16-bit grayscale PNG, `round(v * 65535)`.
/// Values outside `[0, 1]` are clamped.
pub fn write_float(path: &Path, img: &FloatImage) -> Result<()> {
    let gray = quantize(img, 16)?;
    write_gray(path, &gray)
}

/// Quantizes a `[0, 1]` image to integer intensities at the given depth.
pub fn quantize(img: &FloatImage, bit_depth: u8) -> Result<GrayImage> {
    if bit_depth != 8 && bit_depth != 16 {
        return Err(Error::param(format!("bit depth {bit_depth} not supported")));
    }
    let max = if bit_depth == 8 {
        u8::MAX as f64
    } else {
        u16::MAX as f64
    };
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| (v * max).round().clamp(0.0, max) as u16)
        .collect();
    GrayImage::new(img.width(), img.height(), bit_depth, pixels)
}

// -------------------------------------------------------- RGB three-channel

/// Writes a three-channel image as 8-bit RGB PNG, `round(v * 255)` per
/// channel with clamping.
pub fn write_rgb(path: &Path, img: &ThreeChannelImage) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut raw = Vec::with_capacity(w * h * 3);
    for idx in 0..w * h {
        for ch in img.channels() {
            raw.push((ch.pixels()[idx] * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    let buf: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(w as u32, h as u32, raw).expect("buffer sized to dimensions");
    buf.save(path)?;
    Ok(())
}

/// Reads an 8-bit RGB PNG back into three `[0, 1]` channels.
pub fn read_rgb(path: &Path) -> Result<ThreeChannelImage> {
    let dynamic = image::open(path)?;
    let buf = match dynamic {
        image::DynamicImage::ImageRgb8(buf) => buf,
        other => {
            return Err(Error::param(format!(
                "{}: expected RGB8 PNG, found {:?} pixels",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (buf.width() as usize, buf.height() as usize);
    let raw = buf.into_raw();
    let mut channels = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    for px in raw.chunks_exact(3) {
        for (c, &v) in px.iter().enumerate() {
            channels[c].push(v as f64 / 255.0);
        }
    }
    let [r, g, b] = channels;
    ThreeChannelImage::new(
        FloatImage::new(w, h, r)?,
        FloatImage::new(w, h, g)?,
        FloatImage::new(w, h, b)?,
    )
}
