use crate::boxgeom::ImageDims;
use crate::dataio::{quantize, RasterImage};

use super::generator::{generator_forward, GeneratorParams};
use super::tensor::Tensor;
use super::SrError;

/// Peak signal-to-noise ratio in dB for 8-bit images. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64, SrError> {
    if a.dims() != b.dims() || a.channels() != b.channels() {
        return Err(SrError::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.dims().width(),
            a.dims().height(),
            a.channels(),
            b.dims().width(),
            b.dims().height(),
            b.channels()
        )));
    }
    let sse: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    let mse = sse / a.pixels().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

/// Planar `(1, C, H, W)` tensor with values scaled to [0, 1].
pub fn raster_to_tensor(img: &RasterImage) -> Tensor {
    let (w, h) = (img.dims().width() as usize, img.dims().height() as usize);
    let c = img.channels() as usize;
    let mut data = vec![0.0; c * h * w];
    for (i, &v) in img.pixels().iter().enumerate() {
        let (p, ch) = (i / c, i % c);
        data[ch * h * w + p] = v as f64 / 255.0;
    }
    Tensor::new([1, c, h, w], data).expect("raster shape")
}

/// First batch item back to 8-bit, clamping and rounding each value.
pub fn tensor_to_raster(t: &Tensor) -> Result<RasterImage, SrError> {
    let [_, c, h, w] = t.shape();
    if c != 1 && c != 3 {
        return Err(SrError::Shape(format!("{c} channels cannot be rasterized")));
    }
    let dims = ImageDims::new(w as u32, h as u32).map_err(|e| SrError::Shape(e.to_string()))?;
    let mut px = vec![0u8; c * h * w];
    for ch in 0..c {
        for p in 0..h * w {
            px[p * c + ch] = quantize(t.data()[ch * h * w + p] * 255.0);
        }
    }
    RasterImage::new(dims, c as u8, px).map_err(|e| SrError::Shape(e.to_string()))
}

pub fn upscale_rrdb(img: &RasterImage, params: &GeneratorParams) -> Result<RasterImage, SrError> {
    tensor_to_raster(&generator_forward(&raster_to_tensor(img), params)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: u32, h: u32, c: u8, px: Vec<u8>) -> RasterImage {
        RasterImage::new(ImageDims::new(w, h).unwrap(), c, px).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = img(2, 2, 1, vec![0, 10, 20, 30]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let black = img(2, 1, 3, vec![0; 6]);
        let white = img(2, 1, 3, vec![255; 6]);
        assert!(psnr(&black, &white).unwrap().abs() < 1e-12);
        // every pixel off by 5 → MSE 25
        let b = img(2, 2, 1, vec![5, 15, 25, 35]);
        let want = 10.0 * (65025.0f64 / 25.0).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!((want - 34.15).abs() < 0.01);
        assert!(matches!(psnr(&a, &black), Err(SrError::Shape(_))));
    }

    #[test]
    fn raster_tensor_round_trip() {
        let px: Vec<u8> = (0..24).map(|v| (v * 11) as u8).collect();
        let a = img(4, 2, 3, px);
        let t = raster_to_tensor(&a);
        assert_eq!(t.shape(), [1, 3, 2, 4]);
        // channel 1 of pixel (1,0) is byte 4
        assert_eq!(t.get(0, 1, 0, 1), 44.0 / 255.0);
        assert_eq!(tensor_to_raster(&t).unwrap(), a);
    }

    #[test]
    fn zero_generator_gives_bias_image() {
        let cfg = super::super::GeneratorConfig::default();
        let mut p = GeneratorParams::zeros(cfg).unwrap();
        p.tail_out.bias_mut().copy_from_slice(&[0.5, 0.0, 2.0]);
        let out = upscale_rrdb(&img(3, 2, 3, vec![77; 18]), &p).unwrap();
        assert_eq!(out.dims(), ImageDims::new(12, 8).unwrap());
        assert!(out.pixels().chunks(3).all(|c| c == [128, 0, 255]));
    }
}
