//! Dense NCHW tensors and the handful of ops the generator needs.

use serde::{Deserialize, Serialize};

use super::SrError;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: [usize; 4],
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: [usize; 4], data: Vec<f64>) -> Result<Self, SrError> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(SrError::Shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(SrError::NonFinite);
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn full(shape: [usize; 4], value: f64) -> Self {
        Self {
            shape,
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, n: usize, c: usize, y: usize, x: usize) -> f64 {
        let [_, ch, h, w] = self.shape;
        self.data[((n * ch + c) * h + y) * w + x]
    }

    /// `self + scale·other`, elementwise.
    pub fn add_scaled(&self, other: &Tensor, scale: f64) -> Result<Tensor, SrError> {
        if self.shape != other.shape {
            return Err(SrError::Shape(format!(
                "cannot add {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Tensor {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        })
    }

    /// Concatenate along the channel axis.
    pub fn concat_channels(parts: &[&Tensor]) -> Result<Tensor, SrError> {
        let first = parts
            .first()
            .ok_or_else(|| SrError::Shape("nothing to concatenate".into()))?;
        let [b, _, h, w] = first.shape;
        if parts
            .iter()
            .any(|t| t.shape[0] != b || t.shape[2] != h || t.shape[3] != w)
        {
            return Err(SrError::Shape(
                "concat needs equal batch and spatial dims".into(),
            ));
        }
        let c_total: usize = parts.iter().map(|t| t.shape[1]).sum();
        let plane = h * w;
        let mut data = Vec::with_capacity(b * c_total * plane);
        for n in 0..b {
            for t in parts {
                let c = t.shape[1];
                data.extend_from_slice(&t.data[n * c * plane..(n + 1) * c * plane]);
            }
        }
        Ok(Tensor {
            shape: [b, c_total, h, w],
            data,
        })
    }

    /// Nearest-neighbour ×2 upsampling of both spatial axes.
    pub fn upsample_nearest2x(&self) -> Tensor {
        let [b, c, h, w] = self.shape;
        let (h2, w2) = (2 * h, 2 * w);
        let mut data = Vec::with_capacity(b * c * h2 * w2);
        for plane in self.data.chunks(h * w) {
            for y in 0..h2 {
                let row = &plane[(y / 2) * w..(y / 2 + 1) * w];
                for x in 0..w2 {
                    data.push(row[x / 2]);
                }
            }
        }
        Tensor {
            shape: [b, c, h2, w2],
            data,
        }
    }
}

/// Weights `(out_ch, in_ch, kh, kw)` and bias `(out_ch)` of a same-padding
/// convolution. Kernel sides are odd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvParams {
    out_ch: usize,
    in_ch: usize,
    kh: usize,
    kw: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvParams {
    pub fn new(
        out_ch: usize,
        in_ch: usize,
        kh: usize,
        kw: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, SrError> {
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(SrError::Config(format!(
                "kernel {kh}x{kw} must have odd sides"
            )));
        }
        if weights.len() != out_ch * in_ch * kh * kw || bias.len() != out_ch {
            return Err(SrError::Shape(format!(
                "conv ({out_ch},{in_ch},{kh},{kw}) got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(SrError::NonFinite);
        }
        Ok(Self {
            out_ch,
            in_ch,
            kh,
            kw,
            weights,
            bias,
        })
    }

    pub fn zeros(out_ch: usize, in_ch: usize, k: usize) -> Self {
        Self {
            out_ch,
            in_ch,
            kh: k,
            kw: k,
            weights: vec![0.0; out_ch * in_ch * k * k],
            bias: vec![0.0; out_ch],
        }
    }

    pub fn out_ch(&self) -> usize {
        self.out_ch
    }

    pub fn in_ch(&self) -> usize {
        self.in_ch
    }

    pub fn kernel(&self) -> (usize, usize) {
        (self.kh, self.kw)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_ch + i) * self.kh + ky) * self.kw + kx]
    }
}

/// Stride-1 zero-padded cross-correlation plus bias; spatial dims are kept.
pub fn conv2d(x: &Tensor, p: &ConvParams) -> Result<Tensor, SrError> {
    let [b, c, h, w] = x.shape;
    if c != p.in_ch {
        return Err(SrError::Shape(format!(
            "conv expects {} input channels, tensor has {c}",
            p.in_ch
        )));
    }
    let (ry, rx) = ((p.kh / 2) as isize, (p.kw / 2) as isize);
    let plane = h * w;
    let mut out = vec![0.0; b * p.out_ch * plane];
    for n in 0..b {
        for o in 0..p.out_ch {
            let dst = &mut out[(n * p.out_ch + o) * plane..(n * p.out_ch + o + 1) * plane];
            dst.fill(p.bias[o]);
            for i in 0..c {
                let src = &x.data[(n * c + i) * plane..(n * c + i + 1) * plane];
                for ky in 0..p.kh {
                    let dy = ky as isize - ry;
                    for kx in 0..p.kw {
                        let dx = kx as isize - rx;
                        let wv = p.weight(o, i, ky, kx);
                        if wv == 0.0 {
                            continue;
                        }
                        let x_lo = (-dx).max(0) as usize;
                        let x_hi = (w as isize - dx).min(w as isize).max(0) as usize;
                        for y in 0..h {
                            let sy = y as isize + dy;
                            if sy < 0 || sy >= h as isize {
                                continue;
                            }
                            let srow = &src[sy as usize * w..(sy as usize + 1) * w];
                            let drow = &mut dst[y * w..(y + 1) * w];
                            for xx in x_lo..x_hi {
                                drow[xx] += wv * srow[(xx as isize + dx) as usize];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(Tensor {
        shape: [b, p.out_ch, h, w],
        data: out,
    })
}

/// Elementwise `max(x, slope·x)` for `slope ∈ [0, 1)`.
pub fn leaky_relu(x: &Tensor, slope: f64) -> Tensor {
    Tensor {
        shape: x.shape,
        data: x
            .data
            .iter()
            .map(|&v| if v >= 0.0 { v } else { slope * v })
            .collect(),
    }
}
