use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::timing::TimingStats;
use super::{read_text, write_file, PipelineError, Result};
use crate::boxgeom::ImageDims;
use crate::dataio::{load_ppm, resize_image, write_ppm, RasterImage, ResizeMethod};
use crate::exec::Execution;
use crate::srcore::{upscale_rrdb, weights_from_json, GeneratorParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpscaleMethod {
    Nearest,
    Bilinear,
    Bicubic,
    Rrdb,
}

impl FromStr for UpscaleMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(UpscaleMethod::Nearest),
            "bilinear" => Ok(UpscaleMethod::Bilinear),
            "bicubic" => Ok(UpscaleMethod::Bicubic),
            "rrdb" => Ok(UpscaleMethod::Rrdb),
            other => Err(format!(
                "unknown upscale method {other:?} (nearest|bilinear|bicubic|rrdb)"
            )),
        }
    }
}

impl fmt::Display for UpscaleMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpscaleMethod::Nearest => "nearest",
            UpscaleMethod::Bilinear => "bilinear",
            UpscaleMethod::Bicubic => "bicubic",
            UpscaleMethod::Rrdb => "rrdb",
        })
    }
}

/// A ready-to-run upscaler.
#[derive(Debug, Clone)]
pub(crate) enum Upscaler {
    Resize(ResizeMethod, u32),
    Rrdb(Box<GeneratorParams>),
}

impl Upscaler {
    pub(crate) fn new(method: UpscaleMethod, factor: u32, weights: Option<&Path>) -> Result<Self> {
        if factor == 0 {
            return Err(PipelineError::Config(
                "upscale factor must be positive".into(),
            ));
        }
        let resize = |m| Ok(Upscaler::Resize(m, factor));
        match method {
            UpscaleMethod::Nearest => resize(ResizeMethod::Nearest),
            UpscaleMethod::Bilinear => resize(ResizeMethod::Bilinear),
            UpscaleMethod::Bicubic => resize(ResizeMethod::Bicubic),
            UpscaleMethod::Rrdb => {
                let path = weights.ok_or_else(|| {
                    PipelineError::Config("rrdb upscaling needs a weights file".into())
                })?;
                let params = weights_from_json(&read_text(path)?)?;
                if params.config.upscale_factor != factor as usize {
                    return Err(PipelineError::Config(format!(
                        "weights are for factor {}, requested {factor}",
                        params.config.upscale_factor
                    )));
                }
                Ok(Upscaler::Rrdb(Box::new(params)))
            }
        }
    }

    pub(crate) fn apply(&self, img: &RasterImage) -> std::result::Result<RasterImage, String> {
        match self {
            Upscaler::Resize(m, f) => {
                let d = img.dims();
                let target =
                    ImageDims::new(d.width() * f, d.height() * f).map_err(|e| e.to_string())?;
                Ok(resize_image(img, target, *m))
            }
            Upscaler::Rrdb(p) => upscale_rrdb(img, p).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpscaleOutcome {
    pub written: Vec<PathBuf>,
    pub skipped: Vec<(PathBuf, String)>,
    /// Compute time per written image, file I/O excluded.
    pub timing: TimingStats,
}

fn is_raster(p: &Path) -> bool {
    p.is_file()
        && matches!(
            p.extension()
                .and_then(|e| e.to_str())
                .map(str::to_ascii_lowercase)
                .as_deref(),
            Some("ppm" | "pgm")
        )
}

/// `.ppm`/`.pgm` files directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = std::fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut out: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_raster(p))
        .collect();
    out.sort();
    Ok(out)
}

/// The raster file for `image_id` in `dir`, trying `.ppm` then `.pgm`.
pub fn find_image(dir: &Path, image_id: &str) -> Option<PathBuf> {
    ["ppm", "pgm"]
        .iter()
        .map(|ext| dir.join(format!("{image_id}.{ext}")))
        .find(|p| p.is_file())
}

pub(crate) fn load_raster(path: &Path) -> Result<RasterImage> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    load_ppm(&bytes).map_err(|source| PipelineError::Raster {
        path: path.to_path_buf(),
        source,
    })
}

/// Upscale every image in `input` into `output`, keeping file names.
/// Unreadable images are skipped and listed; bad weights abort.
pub fn upscale_dir(
    input: &Path,
    output: &Path,
    method: UpscaleMethod,
    factor: u32,
    weights: Option<&Path>,
    exec: Execution,
) -> Result<UpscaleOutcome> {
    let upscaler = Upscaler::new(method, factor, weights)?;
    let images = list_images(input)?;
    std::fs::create_dir_all(output).map_err(|e| PipelineError::io(output, e))?;
    let results = exec.map(
        &images,
        |path| -> std::result::Result<(PathBuf, f64), String> {
            let img = load_raster(path).map_err(|e| e.to_string())?;
            let start = Instant::now();
            let up = upscaler.apply(&img)?;
            let secs = start.elapsed().as_secs_f64();
            let dest = output.join(path.file_name().expect("listed files have names"));
            write_file(&dest, write_ppm(&up)).map_err(|e| e.to_string())?;
            Ok((dest, secs))
        },
    );
    let mut written = Vec::new();
    let mut skipped = Vec::new();
    let mut samples = Vec::new();
    for (path, r) in images.into_iter().zip(results) {
        match r {
            Ok((dest, secs)) => {
                written.push(dest);
                samples.push(secs);
            }
            Err(msg) => skipped.push((path, msg)),
        }
    }
    Ok(UpscaleOutcome {
        written,
        skipped,
        timing: TimingStats::from_samples(samples),
    })
}
