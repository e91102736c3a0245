//! Axis-aligned box geometry in pixel and normalized (YOLO) coordinates.
//!
//! Areas use continuous closed-interval semantics: a box `(0,0,10,10)`
//! covers exactly 100 square units, not 121 pixel indices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinate in box")]
    NonFinite,
    #[error("inverted box: x_max < x_min or y_max < y_min ({0:?})")]
    Inverted([f64; 4]),
    #[error("normalized box field {field} = {value} out of range")]
    NormRange { field: &'static str, value: f64 },
    #[error("image dimensions must be at least 1x1, got {0}x{1}")]
    EmptyDims(u32, u32),
    #[error("box {0:?} exceeds image bounds {1}x{2}")]
    OutOfBounds([f64; 4], u32, u32),
    #[error("box has zero extent and cannot be normalized")]
    ZeroExtent,
    #[error("scale factors must be positive, got ({0}, {1})")]
    BadScale(f64, f64),
}

/// Pixel-space box, `x_max >= x_min` and `y_max >= y_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeomError> {
        let c = [x_min, y_min, x_max, y_max];
        if c.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        if x_max < x_min || y_max < y_min {
            return Err(GeomError::Inverted(c));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    /// Area of the overlap with `other`; zero when the boxes are disjoint or only touch.
    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }
}

/// Center/size box normalized by image dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox {
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
}

impl NormBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, GeomError> {
        for (field, value) in [("cx", cx), ("cy", cy)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GeomError::NormRange { field, value });
            }
        }
        for (field, value) in [("w", w), ("h", h)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(GeomError::NormRange { field, value });
            }
        }
        Ok(Self { cx, cy, w, h })
    }

    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn h(&self) -> f64 {
        self.h
    }

    /// The box in a unit frame, i.e. `norm_to_pixel` with a 1×1 image.
    ///
    /// IoU is invariant under per-axis scaling, so matching can run here
    /// without knowing the image size.
    pub fn to_unit_bbox(&self) -> BBox {
        clipped_box(self, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageDims {
    width: u32,
    height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self, GeomError> {
        if width == 0 || height == 0 {
            return Err(GeomError::EmptyDims(width, height));
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Intersection over union with continuous areas. A zero-area union yields 0.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn clipped_box(nb: &NormBox, width: f64, height: f64) -> BBox {
    let half_w = nb.w / 2.0;
    let half_h = nb.h / 2.0;
    let x_min = ((nb.cx - half_w) * width).clamp(0.0, width);
    let x_max = ((nb.cx + half_w) * width).clamp(0.0, width);
    let y_min = ((nb.cy - half_h) * height).clamp(0.0, height);
    let y_max = ((nb.cy + half_h) * height).clamp(0.0, height);
    BBox {
        x_min,
        y_min,
        x_max,
        y_max,
    }
}

/// Convert a normalized box to pixels, clipping to `[0,width]×[0,height]`.
pub fn norm_to_pixel(nb: &NormBox, dims: ImageDims) -> BBox {
    clipped_box(nb, dims.width as f64, dims.height as f64)
}

pub fn pixel_to_norm(b: &BBox, dims: ImageDims) -> Result<NormBox, GeomError> {
    let (w, h) = (dims.width as f64, dims.height as f64);
    if b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > w || b.y_max > h {
        return Err(GeomError::OutOfBounds(
            b.as_array(),
            dims.width,
            dims.height,
        ));
    }
    if b.width() <= 0.0 || b.height() <= 0.0 {
        return Err(GeomError::ZeroExtent);
    }
    NormBox::new(
        (b.x_min + b.x_max) / 2.0 / w,
        (b.y_min + b.y_max) / 2.0 / h,
        b.width() / w,
        b.height() / h,
    )
}

pub fn scale_box(b: &BBox, sx: f64, sy: f64) -> Result<BBox, GeomError> {
    if !(sx > 0.0 && sy > 0.0) || !sx.is_finite() || !sy.is_finite() {
        return Err(GeomError::BadScale(sx, sy));
    }
    BBox::new(b.x_min * sx, b.y_min * sy, b.x_max * sx, b.y_max * sy)
}
