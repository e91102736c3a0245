//! 8-bit rasters with binary PPM (P6) / PGM (P5) I/O and resampling.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxgeom::ImageDims;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RasterError {
    #[error("unsupported magic {0:?} (expected P5 or P6)")]
    Magic(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("maxval {0} not supported (only 255)")]
    MaxVal(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("channels must be 1 or 3, got {0}")]
    Channels(u8),
    #[error("pixel buffer has {found} samples, expected {expected}")]
    BufferLen { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    dims: ImageDims,
    channels: u8,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(dims: ImageDims, channels: u8, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if channels != 1 && channels != 3 {
            return Err(RasterError::Channels(channels));
        }
        let expected = dims.pixel_count() * channels as usize;
        if pixels.len() != expected {
            return Err(RasterError::BufferLen {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            dims,
            channels,
            pixels,
        })
    }

    pub fn filled(dims: ImageDims, channels: u8, value: u8) -> Result<Self, RasterError> {
        Self::new(
            dims,
            channels,
            vec![value; dims.pixel_count() * channels as usize],
        )
    }

    pub fn dims(&self) -> ImageDims {
        self.dims
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn get(&self, x: u32, y: u32, c: u8) -> u8 {
        self.pixels[self.index(x, y, c)]
    }

    pub fn set(&mut self, x: u32, y: u32, c: u8, v: u8) {
        let i = self.index(x, y, c);
        self.pixels[i] = v;
    }

    fn index(&self, x: u32, y: u32, c: u8) -> usize {
        (y as usize * self.dims.width() as usize + x as usize) * self.channels as usize + c as usize
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, RasterError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(RasterError::Header(format!("missing {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| RasterError::Header(format!("{what} out of range")))
    }
}

/// Decode a binary P5/P6 file with maxval 255. Trailing bytes after the
/// pixel block are ignored.
pub fn load_ppm(bytes: &[u8]) -> Result<RasterImage, RasterError> {
    if bytes.len() < 2 {
        return Err(RasterError::Header("file too short".into()));
    }
    let channels = match &bytes[..2] {
        b"P6" => 3,
        b"P5" => 1,
        m => return Err(RasterError::Magic(String::from_utf8_lossy(m).into_owned())),
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(RasterError::MaxVal(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(RasterError::Header(
                "missing whitespace after maxval".into(),
            ))
        }
    }
    let dims = ImageDims::new(width, height).map_err(|e| RasterError::Header(e.to_string()))?;
    let expected = dims.pixel_count() * channels as usize;
    let data = &bytes[cur.pos..];
    if data.len() < expected {
        return Err(RasterError::Truncated {
            expected,
            found: data.len(),
        });
    }
    RasterImage::new(dims, channels, data[..expected].to_vec())
}

/// Canonical encoding: `P6\n<w> <h>\n255\n` followed by the raw samples.
pub fn write_ppm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 3 { "P6" } else { "P5" };
    let header = format!("{magic}\n{} {}\n255\n", img.dims.width(), img.dims.height());
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

/// Read only the header and return the image dimensions.
pub fn read_ppm_dims(bytes: &[u8]) -> Result<ImageDims, RasterError> {
    if bytes.len() < 2 || !(bytes.starts_with(b"P5") || bytes.starts_with(b"P6")) {
        return Err(RasterError::Magic(
            String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        ));
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let w = cur.number("width")?;
    let h = cur.number("height")?;
    ImageDims::new(w, h).map_err(|e| RasterError::Header(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResizeMethod {
    Nearest,
    Bilinear,
    Bicubic,
}

impl FromStr for ResizeMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(ResizeMethod::Nearest),
            "bilinear" => Ok(ResizeMethod::Bilinear),
            "bicubic" => Ok(ResizeMethod::Bicubic),
            other => Err(format!("unknown resize method {other:?}")),
        }
    }
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
pub fn catmull_rom(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// One output coordinate: source taps (already clamped) and their weights.
struct Taps {
    index: Vec<usize>,
    weight: Vec<f64>,
}

/// Pixel-center alignment: `src = (dst + 0.5)·scale − 0.5`.
fn axis_taps(src_len: u32, dst_len: u32, method: ResizeMethod) -> Vec<Taps> {
    let scale = src_len as f64 / dst_len as f64;
    let last = src_len as i64 - 1;
    let clamp = |i: i64| i.clamp(0, last) as usize;
    (0..dst_len)
        .map(|d| {
            let center = (d as f64 + 0.5) * scale;
            match method {
                ResizeMethod::Nearest => Taps {
                    index: vec![clamp(center.floor() as i64)],
                    weight: vec![1.0],
                },
                ResizeMethod::Bilinear => {
                    let s = center - 0.5;
                    let i0 = s.floor();
                    let f = s - i0;
                    let i0 = i0 as i64;
                    Taps {
                        index: vec![clamp(i0), clamp(i0 + 1)],
                        weight: vec![1.0 - f, f],
                    }
                }
                ResizeMethod::Bicubic => {
                    let s = center - 0.5;
                    let i0 = s.floor();
                    let f = s - i0;
                    let i0 = i0 as i64;
                    let offsets = [-1i64, 0, 1, 2];
                    Taps {
                        index: offsets.iter().map(|&o| clamp(i0 + o)).collect(),
                        weight: offsets.iter().map(|&o| catmull_rom(f - o as f64)).collect(),
                    }
                }
            }
        })
        .collect()
}

pub(crate) fn quantize(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Separable resampling to `target`. Values are kept in f64 between the
/// horizontal and vertical passes and quantized once at the end.
pub fn resize_image(img: &RasterImage, target: ImageDims, method: ResizeMethod) -> RasterImage {
    let (sw, sh) = (img.dims.width(), img.dims.height());
    let (tw, th) = (target.width() as usize, target.height() as usize);
    let ch = img.channels as usize;
    let xt = axis_taps(sw, target.width(), method);
    let yt = axis_taps(sh, target.height(), method);

    let mut horiz = vec![0.0f64; sh as usize * tw * ch];
    for y in 0..sh as usize {
        let src_row = &img.pixels[y * sw as usize * ch..(y + 1) * sw as usize * ch];
        let dst_row = &mut horiz[y * tw * ch..(y + 1) * tw * ch];
        for (x, taps) in xt.iter().enumerate() {
            for c in 0..ch {
                dst_row[x * ch + c] = taps
                    .index
                    .iter()
                    .zip(&taps.weight)
                    .map(|(&i, &w)| w * src_row[i * ch + c] as f64)
                    .sum();
            }
        }
    }

    let row_len = tw * ch;
    let mut out = vec![0u8; th * row_len];
    for (y, taps) in yt.iter().enumerate() {
        let dst_row = &mut out[y * row_len..(y + 1) * row_len];
        for (k, px) in dst_row.iter_mut().enumerate() {
            let v: f64 = taps
                .index
                .iter()
                .zip(&taps.weight)
                .map(|(&i, &w)| w * horiz[i * row_len + k])
                .sum();
            *px = quantize(v);
        }
    }
    RasterImage {
        dims: target,
        channels: img.channels,
        pixels: out,
    }
}
