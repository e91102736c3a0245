//! Synthetic road-surface corpus: gray textured frames with dark elliptical
//! blobs, exact ground-truth boxes, and detections with controlled jitter.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{write_file, Result};
use crate::boxgeom::{ImageDims, NormBox};
use crate::dataio::{
    serialize_detections, serialize_labels, write_ppm, Annotation, DetFormat, Detection,
    ManifestFile, RasterImage,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_images: usize,
    pub width: u32,
    pub height: u32,
    pub seed: u64,
    /// Center shift as a fraction of box size, one detection set per level.
    pub jitter_levels: Vec<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_images: 60,
            width: 96,
            height: 72,
            seed: 0,
            jitter_levels: vec![0.0, 0.02, 0.05, 0.1, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub image_ids: Vec<String>,
    pub annotations: Vec<Vec<Annotation>>,
    pub manifest: PathBuf,
    pub image_dir: PathBuf,
    pub label_dir: PathBuf,
    /// `(level, directory)` per jitter level.
    pub detection_dirs: Vec<(f64, PathBuf)>,
}

struct Blob {
    cx: f64,
    cy: f64,
    a: f64,
    b: f64,
}

fn place_blobs(rng: &mut ChaCha8Rng, dims: ImageDims) -> Vec<Blob> {
    let (w, h) = (dims.width() as f64, dims.height() as f64);
    let n = rng.gen_range(0..=3);
    let mut blobs: Vec<Blob> = Vec::new();
    let mut tries = 0;
    while blobs.len() < n && tries < 200 {
        tries += 1;
        let a = rng.gen_range(0.06..0.14) * w;
        let b = rng.gen_range(0.06..0.14) * h;
        // room for a 20% shift on every side
        let (mx, my) = (a * 1.4, b * 1.4);
        let cx = rng.gen_range(mx..w - mx);
        let cy = rng.gen_range(my..h - my);
        let clear = blobs
            .iter()
            .all(|o| (cx - o.cx).abs() > 1.5 * (a + o.a) || (cy - o.cy).abs() > 1.5 * (b + o.b));
        if clear {
            blobs.push(Blob { cx, cy, a, b });
        }
    }
    blobs
}

fn render(rng: &mut ChaCha8Rng, dims: ImageDims, blobs: &[Blob]) -> RasterImage {
    let mut img = RasterImage::filled(dims, 3, 0).expect("valid dims");
    let base: f64 = rng.gen_range(120.0..160.0);
    for y in 0..dims.height() {
        for x in 0..dims.width() {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let inside = blobs.iter().any(|bl| {
                let (dx, dy) = ((px - bl.cx) / bl.a, (py - bl.cy) / bl.b);
                dx * dx + dy * dy <= 1.0
            });
            let level = if inside { 50.0 } else { base } + rng.gen_range(-10.0..10.0);
            for c in 0..3 {
                img.set(
                    x,
                    y,
                    c,
                    (level - 4.0 * c as f64).round().clamp(0.0, 255.0) as u8,
                );
            }
        }
    }
    img
}

fn blob_box(bl: &Blob, dims: ImageDims) -> NormBox {
    let (w, h) = (dims.width() as f64, dims.height() as f64);
    NormBox::new(bl.cx / w, bl.cy / h, 2.0 * bl.a / w, 2.0 * bl.b / h).expect("blob inside frame")
}

/// Each annotation becomes one detection whose center moves by
/// `level·width` and `level·height` in random directions. Confidences are
/// uniform in [0.5, 1).
pub fn jitter_detections(
    annotations: &[Annotation],
    level: f64,
    rng: &mut impl Rng,
) -> Vec<Detection> {
    annotations
        .iter()
        .map(|a| {
            let b = a.bbox;
            let sx = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let sy = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let cx = (b.cx() + sx * level * b.w()).clamp(0.0, 1.0);
            let cy = (b.cy() + sy * level * b.h()).clamp(0.0, 1.0);
            Detection {
                class_id: a.class_id,
                confidence: rng.gen_range(0.5..1.0),
                bbox: NormBox::new(cx, cy, b.w(), b.h()).expect("jittered box valid"),
            }
        })
        .collect()
}

pub fn oracle_detections(annotations: &[Annotation], rng: &mut impl Rng) -> Vec<Detection> {
    jitter_detections(annotations, 0.0, rng)
}

/// Write `images/`, `labels/`, `detections/jitter_<level>/` and a
/// `manifest.json` that puts every image in the test split.
pub fn write_synth_corpus(dir: &Path, spec: &SynthSpec) -> Result<SynthCorpus> {
    let dims = ImageDims::new(spec.width, spec.height)
        .map_err(|e| super::PipelineError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let image_dir = dir.join("images");
    let label_dir = dir.join("labels");
    let mut ids = Vec::new();
    let mut all = Vec::new();
    for i in 0..spec.n_images {
        let id = format!("synth_{i:04}");
        let blobs = place_blobs(&mut rng, dims);
        let img = render(&mut rng, dims, &blobs);
        let annotations: Vec<Annotation> = blobs
            .iter()
            .map(|b| Annotation {
                class_id: 0,
                bbox: blob_box(b, dims),
            })
            .collect();
        write_file(&image_dir.join(format!("{id}.ppm")), write_ppm(&img))?;
        write_file(
            &label_dir.join(format!("{id}.txt")),
            serialize_labels(&annotations),
        )?;
        ids.push(id);
        all.push(annotations);
    }
    let mut detection_dirs = Vec::new();
    for &level in &spec.jitter_levels {
        let d = dir.join("detections").join(format!("jitter_{level}"));
        std::fs::create_dir_all(&d).map_err(|e| super::PipelineError::io(&d, e))?;
        for (id, annotations) in ids.iter().zip(&all) {
            let dets = jitter_detections(annotations, level, &mut rng);
            write_file(
                &d.join(format!("{id}.txt")),
                serialize_detections(&dets, DetFormat::ConfFirst),
            )?;
        }
        detection_dirs.push((level, d));
    }
    let manifest = dir.join("manifest.json");
    let file = ManifestFile {
        seed: spec.seed,
        train: vec![],
        val: vec![],
        test: ids.clone(),
    };
    write_file(&manifest, file.to_json())?;
    Ok(SynthCorpus {
        image_ids: ids,
        annotations: all,
        manifest,
        image_dir,
        label_dir,
        detection_dirs,
    })
}
