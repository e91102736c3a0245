use std::collections::BTreeSet;
use std::io::ErrorKind;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{OperatingSpec, RunConfig, TimingSource};
use super::timing::{bench_command, TimingStats};
use super::upscale::{find_image, load_raster, Upscaler};
use super::{read_json, PipelineError, Result, TOOL_VERSION};
use crate::dataio::{parse_detection_file_with, parse_label_file_with, ManifestFile, ParseError};
use crate::exec::Execution;
use crate::metrics::{
    classes_in, map_from_matches, match_images, operating_point, pr_curve, ConfusionCounts,
    ImageBoxes, MatchResult, PrCurve, RangeMap,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image_id: String,
    pub n_gt: usize,
    pub n_detections: usize,
    /// Counts at the operating point. `None` when the image could not be read.
    pub counts: Option<ConfusionCounts>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOperatingPoint {
    pub mode: OperatingSpec,
    pub iou_threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confidence: Option<f64>,
    pub rank: usize,
    pub degenerate: bool,
    pub counts: ConfusionCounts,
}

/// One evaluation run. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub per_image: Vec<ImageEntry>,
    pub curve: PrCurve,
    pub map_50: f64,
    pub map_range: RangeMap,
    pub operating_point: ReportOperatingPoint,
    pub f1: f64,
    pub timing: Option<TimingStats>,
    pub version: String,
}

impl EvalReport {
    /// True when some image was skipped or failed timing.
    pub fn has_errors(&self) -> bool {
        self.per_image.iter().any(|e| e.error.is_some())
    }
}

fn image_ids(cfg: &RunConfig) -> Result<Vec<String>> {
    let mut ids: Vec<String> = match &cfg.manifest {
        Some(m) => read_json::<ManifestFile>(m)?.ids(cfg.split),
        None => {
            let rd =
                std::fs::read_dir(&cfg.gt_dir).map_err(|e| PipelineError::io(&cfg.gt_dir, e))?;
            rd.filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
                .filter_map(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
                .collect()
        }
    };
    ids.sort();
    ids.dedup();
    Ok(ids)
}

enum Loaded {
    Ok(ImageBoxes),
    Unreadable(String),
}

fn parse_err(path: PathBuf) -> impl FnOnce(ParseError) -> PipelineError {
    move |source| PipelineError::Parse { path, source }
}

fn load_one(cfg: &RunConfig, id: &str) -> Result<Loaded> {
    let gt_path = cfg.gt_dir.join(format!("{id}.txt"));
    let gt_text = match std::fs::read_to_string(&gt_path) {
        Ok(t) => t,
        Err(e) => return Ok(Loaded::Unreadable(format!("{}: {e}", gt_path.display()))),
    };
    let annotations =
        parse_label_file_with(&gt_text, cfg.num_classes).map_err(parse_err(gt_path))?;
    let det_path = cfg.det_dir.join(format!("{id}.txt"));
    let det_text = match std::fs::read_to_string(&det_path) {
        Ok(t) => t,
        Err(e) if e.kind() == ErrorKind::NotFound => String::new(),
        Err(e) => return Ok(Loaded::Unreadable(format!("{}: {e}", det_path.display()))),
    };
    let detections = parse_detection_file_with(&det_text, cfg.det_format, cfg.num_classes)
        .map_err(parse_err(det_path))?;
    Ok(Loaded::Ok(ImageBoxes {
        detections,
        annotations,
    }))
}

/// Boxes of every image selected by `cfg`, sorted by image id. `Err` entries
/// are images whose files could not be read. A malformed file aborts.
pub fn load_images(
    cfg: &RunConfig,
    exec: Execution,
) -> Result<Vec<(String, std::result::Result<ImageBoxes, String>)>> {
    let ids = image_ids(cfg)?;
    let loaded = exec.map(&ids, |id| load_one(cfg, id));
    ids.into_iter()
        .zip(loaded)
        .map(|(id, l)| {
            Ok(match l? {
                Loaded::Ok(b) => (id, Ok(b)),
                Loaded::Unreadable(msg) => (id, Err(msg)),
            })
        })
        .collect()
}

/// Thresholds needed by a run, each once: 0.5, the curve threshold and the
/// range. Returns the list and the index of each role.
fn threshold_plan(cfg: &RunConfig) -> Result<(Vec<f64>, usize, usize, Vec<usize>)> {
    let range = cfg.range_thresholds()?;
    let mut all: Vec<f64> = Vec::new();
    let mut index_of = |t: f64| match all.iter().position(|&u| (u - t).abs() < 1e-12) {
        Some(i) => i,
        None => {
            all.push(t);
            all.len() - 1
        }
    };
    let i50 = index_of(0.5);
    let iop = index_of(cfg.iou);
    let irange = range.iter().map(|&t| index_of(t)).collect();
    Ok((all, i50, iop, irange))
}

fn time_images(
    cfg: &RunConfig,
    ids: &[String],
    entries: &mut [ImageEntry],
) -> Result<Option<TimingStats>> {
    let Some(dir) = cfg.image_dir.as_deref() else {
        return Ok(None);
    };
    let mut paths = Vec::new();
    let mut slots = Vec::new();
    for (k, id) in ids.iter().enumerate() {
        if entries[k].error.is_some() {
            continue;
        }
        match find_image(dir, id) {
            Some(p) => {
                paths.push(p);
                slots.push(k);
            }
            None => entries[k].error = Some(format!("no image file for {id} in {}", dir.display())),
        }
    }
    match &cfg.timing {
        TimingSource::None => Ok(None),
        TimingSource::Command {
            template,
            repetitions,
        } => {
            let out = bench_command(template, &paths, *repetitions)?;
            for f in &out.failures {
                if let Some(i) = paths.iter().position(|p| *p == f.image) {
                    entries[slots[i]]
                        .error
                        .get_or_insert_with(|| f.message.clone());
                }
            }
            Ok(Some(out.stats))
        }
        TimingSource::Upscaler {
            method,
            factor,
            weights,
        } => {
            let up = Upscaler::new(*method, *factor, weights.as_deref())?;
            let mut samples = Vec::new();
            for (p, &k) in paths.iter().zip(&slots) {
                let timed = load_raster(p).map_err(|e| e.to_string()).and_then(|img| {
                    let start = Instant::now();
                    up.apply(&img)?;
                    Ok(start.elapsed().as_secs_f64())
                });
                match timed {
                    Ok(s) => samples.push(s),
                    Err(msg) => entries[k].error = Some(msg),
                }
            }
            Ok(Some(TimingStats::from_samples(samples)))
        }
    }
}

fn image_counts(m: &MatchResult, cut: Option<f64>) -> ConfusionCounts {
    let mut c = match cut {
        Some(conf) => m.counts_at(conf),
        None => m.counts(),
    };
    c.tn = Some(u64::from(m.total_gt == 0 && c.tp + c.fp == 0));
    c
}

/// Evaluate one detection run against its ground truth.
///
/// `map_50` is always at IoU 0.5; the curve, operating point and per-image
/// counts use `cfg.iou`. Per-image counts keep detections at or above the
/// operating-point confidence (all detections when there is none).
pub fn run_evaluation(cfg: &RunConfig, exec: Execution) -> Result<EvalReport> {
    cfg.validate()?;
    let loaded = load_images(cfg, exec)?;
    let (thresholds, i50, iop, irange) = threshold_plan(cfg)?;

    let ok: Vec<&ImageBoxes> = loaded.iter().filter_map(|(_, r)| r.as_ref().ok()).collect();
    let boxes: Vec<ImageBoxes> = ok.iter().map(|b| (*b).clone()).collect();
    let matches = match_images(&boxes, &thresholds, exec);
    let classes: BTreeSet<u32> = classes_in(&boxes);
    let maps: Vec<f64> = exec.map_range(thresholds.len(), |k| {
        map_from_matches(
            matches.iter().map(|m| &m[k]),
            &classes,
            thresholds[k],
            cfg.ap_mode,
        )
    });

    let merged = MatchResult::merge(matches.iter().map(|m| &m[iop]), thresholds[iop]);
    let curve = pr_curve(&merged);
    let op = operating_point(&curve, cfg.operating_point.into());

    let mut entries = Vec::with_capacity(loaded.len());
    let mut per_match = matches.iter();
    let mut total = ConfusionCounts::default();
    for (id, r) in &loaded {
        entries.push(match r {
            Ok(b) => {
                let c = image_counts(
                    &per_match.next().expect("one match per image")[iop],
                    op.confidence,
                );
                total += c;
                ImageEntry {
                    image_id: id.clone(),
                    n_gt: b.annotations.len(),
                    n_detections: b.detections.len(),
                    counts: Some(c),
                    error: None,
                }
            }
            Err(msg) => ImageEntry {
                image_id: id.clone(),
                n_gt: 0,
                n_detections: 0,
                counts: None,
                error: Some(msg.clone()),
            },
        });
    }
    let ids: Vec<String> = loaded.iter().map(|(id, _)| id.clone()).collect();
    let timing = time_images(cfg, &ids, &mut entries)?;

    let range_values: Vec<f64> = irange.iter().map(|&i| maps[i]).collect();
    let map_range = RangeMap {
        thresholds: irange.iter().map(|&i| thresholds[i]).collect(),
        mean: range_values.iter().sum::<f64>() / range_values.len() as f64,
        per_threshold: range_values,
    };
    Ok(EvalReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        per_image: entries,
        curve,
        map_50: maps[i50],
        map_range,
        operating_point: ReportOperatingPoint {
            mode: cfg.operating_point,
            iou_threshold: thresholds[iop],
            precision: op.precision,
            recall: op.recall,
            f1: op.f1,
            confidence: op.confidence,
            rank: op.rank,
            degenerate: op.degenerate,
            counts: total,
        },
        f1: op.f1,
        timing,
        version: TOOL_VERSION.to_string(),
    })
}
