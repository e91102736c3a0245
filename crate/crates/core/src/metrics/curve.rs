//! Precision/recall curves, average precision and threshold sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::counts::f1;
use super::matching::{IouTable, MatchResult};
use super::MetricsError;
use crate::dataio::{Annotation, Detection};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub confidence: f64,
    pub recall: f64,
    pub precision: f64,
}

/// One point per ranked detection; recall is non-decreasing along `points`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub total_gt: usize,
    pub iou_threshold: f64,
}

impl PrCurve {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

pub fn pr_curve(result: &MatchResult) -> PrCurve {
    let mut ranked = result.records.clone();
    ranked.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut tp = 0usize;
    let points = ranked
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.is_tp {
                tp += 1;
            }
            PrPoint {
                confidence: r.confidence,
                recall: if result.total_gt == 0 {
                    0.0
                } else {
                    tp as f64 / result.total_gt as f64
                },
                precision: tp as f64 / (i + 1) as f64,
            }
        })
        .collect();
    PrCurve {
        points,
        total_gt: result.total_gt,
        iou_threshold: result.iou_threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApMode {
    /// `Σ (R_n − R_{n−1})·P_n` over the curve as ranked.
    #[default]
    #[serde(rename = "raw")]
    Raw,
    /// Same sum after replacing each `P_n` by `max_{m ≥ n} P_m`.
    #[serde(rename = "interp")]
    Interpolated,
}

impl FromStr for ApMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(ApMode::Raw),
            "interp" | "interpolated" => Ok(ApMode::Interpolated),
            other => Err(format!(
                "unknown AP mode {other:?} (expected raw or interp)"
            )),
        }
    }
}

impl fmt::Display for ApMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ApMode::Raw => "raw",
            ApMode::Interpolated => "interp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApResult {
    pub ap: f64,
    pub mode: ApMode,
    pub iou_threshold: f64,
}

pub fn average_precision(curve: &PrCurve, mode: ApMode) -> ApResult {
    let mut precision: Vec<f64> = curve.points.iter().map(|p| p.precision).collect();
    if mode == ApMode::Interpolated {
        for i in (0..precision.len().saturating_sub(1)).rev() {
            precision[i] = precision[i].max(precision[i + 1]);
        }
    }
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (p, pt) in precision.iter().zip(&curve.points) {
        ap += (pt.recall - prev_recall) * p;
        prev_recall = pt.recall;
    }
    ApResult {
        ap: ap.clamp(0.0, 1.0),
        mode,
        iou_threshold: curve.iou_threshold,
    }
}

/// Mean of per-class AP values.
pub fn mean_ap(per_class: &BTreeMap<u32, f64>) -> Result<f64, MetricsError> {
    if per_class.is_empty() {
        return Err(MetricsError::NoClasses);
    }
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatingMode {
    #[default]
    MaxF1,
    FixedConfidence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Confidence cut; detections at or above it are kept. `None` when degenerate.
    pub confidence: Option<f64>,
    /// 1-based rank of the chosen curve point, 0 when none.
    pub rank: usize,
    pub degenerate: bool,
}

impl OperatingPoint {
    fn degenerate() -> Self {
        Self {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            confidence: None,
            rank: 0,
            degenerate: true,
        }
    }
}

/// Pick the reported precision/recall point.
///
/// Only ranks that end a run of equal confidences are candidates, since a
/// confidence threshold cannot separate tied detections. Under
/// [`OperatingMode::MaxF1`], ties in F1 go to the lower confidence. A curve
/// with no true positives is degenerate.
pub fn operating_point(curve: &PrCurve, mode: OperatingMode) -> OperatingPoint {
    let pts = &curve.points;
    let is_cut = |i: usize| i + 1 == pts.len() || pts[i + 1].confidence < pts[i].confidence;
    let pick = |i: usize, degenerate: bool| OperatingPoint {
        precision: pts[i].precision,
        recall: pts[i].recall,
        f1: f1(pts[i].precision, pts[i].recall),
        confidence: Some(pts[i].confidence),
        rank: i + 1,
        degenerate,
    };
    match mode {
        OperatingMode::MaxF1 => {
            let mut best: Option<(usize, f64)> = None;
            for i in (0..pts.len()).filter(|&i| is_cut(i)) {
                let v = f1(pts[i].precision, pts[i].recall);
                if best.is_none_or(|(_, b)| v >= b) {
                    best = Some((i, v));
                }
            }
            match best {
                Some((i, v)) if v > 0.0 => pick(i, false),
                _ => OperatingPoint::degenerate(),
            }
        }
        OperatingMode::FixedConfidence(c) => match pts.iter().rposition(|p| p.confidence >= c) {
            Some(i) => pick(i, curve.total_gt == 0),
            None => OperatingPoint {
                confidence: Some(c),
                ..OperatingPoint::degenerate()
            },
        },
    }
}

/// IoU thresholds `lo, lo+step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IouRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl IouRange {
    /// 0.50:0.95 in steps of 0.05, ten thresholds.
    pub const COCO: IouRange = IouRange {
        lo: 0.5,
        hi: 0.95,
        step: 0.05,
    };
    /// 0.50:0.90 in steps of 0.05, the recall-averaging preset.
    pub const RECALL: IouRange = IouRange {
        lo: 0.5,
        hi: 0.9,
        step: 0.05,
    };

    pub fn thresholds(&self) -> Result<Vec<f64>, MetricsError> {
        if self.step.is_nan()
            || self.step <= 0.0
            || self.lo.is_nan()
            || self.lo <= 0.0
            || self.hi > 1.0
            || self.hi < self.lo
        {
            return Err(MetricsError::BadRange(*self));
        }
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        // snap to 1e-12 so that 0.5 + 4·0.05 is the literal 0.7
        Ok((0..n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect())
    }
}

impl FromStr for IouRange {
    type Err = String;

    /// `lo:hi:step`
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| format!("invalid IoU range {s:?} (expected lo:hi:step)"))?;
        match parts[..] {
            [lo, hi, step] => {
                let r = IouRange { lo, hi, step };
                r.thresholds().map_err(|e| e.to_string())?;
                Ok(r)
            }
            _ => Err(format!("invalid IoU range {s:?} (expected lo:hi:step)")),
        }
    }
}

/// Detections and ground truth of one image.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageBoxes {
    pub detections: Vec<Detection>,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeMap {
    pub thresholds: Vec<f64>,
    pub per_threshold: Vec<f64>,
    pub mean: f64,
}

impl RangeMap {
    pub fn at(&self, threshold: f64) -> Option<f64> {
        self.thresholds
            .iter()
            .position(|&t| (t - threshold).abs() < 1e-12)
            .map(|i| self.per_threshold[i])
    }
}

fn validate_thresholds(thresholds: &[f64]) -> Result<(), MetricsError> {
    if thresholds.is_empty() {
        return Err(MetricsError::NoThresholds);
    }
    match thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        Some(&t) => Err(MetricsError::BadThreshold(t)),
        None => Ok(()),
    }
}

/// Classes present in either the ground truth or the detections.
pub fn classes_in(images: &[ImageBoxes]) -> BTreeSet<u32> {
    images
        .iter()
        .flat_map(|im| {
            im.annotations
                .iter()
                .map(|a| a.class_id)
                .chain(im.detections.iter().map(|d| d.class_id))
        })
        .collect()
}

/// Per-image matching at every threshold: `out[image][threshold]`.
pub fn match_images(
    images: &[ImageBoxes],
    thresholds: &[f64],
    exec: Execution,
) -> Vec<Vec<MatchResult>> {
    exec.map(images, |im| {
        let table = IouTable::from_normalized(&im.detections, &im.annotations);
        thresholds.iter().map(|&t| table.assign(t)).collect()
    })
}

/// mAP over classes from per-image results at a single threshold. A corpus
/// with no classes at all scores 0.
pub fn map_from_matches<'a, I>(
    per_image: I,
    classes: &BTreeSet<u32>,
    threshold: f64,
    mode: ApMode,
) -> f64
where
    I: IntoIterator<Item = &'a MatchResult>,
{
    if classes.is_empty() {
        return 0.0;
    }
    let merged = MatchResult::merge(per_image, threshold);
    let per_class: BTreeMap<u32, f64> = classes
        .iter()
        .map(|&c| {
            let curve = pr_curve(&merged.for_class(c));
            (c, average_precision(&curve, mode).ap)
        })
        .collect();
    mean_ap(&per_class).unwrap_or(0.0)
}

/// Full match → curve → AP → mAP pipeline at each threshold, plus the mean.
pub fn map_over_range(
    images: &[ImageBoxes],
    thresholds: &[f64],
    mode: ApMode,
    exec: Execution,
) -> Result<RangeMap, MetricsError> {
    validate_thresholds(thresholds)?;
    let matches = match_images(images, thresholds, exec);
    let classes = classes_in(images);
    let per_threshold: Vec<f64> = exec.map_range(thresholds.len(), |k| {
        map_from_matches(matches.iter().map(|m| &m[k]), &classes, thresholds[k], mode)
    });
    let mean = per_threshold.iter().sum::<f64>() / per_threshold.len() as f64;
    Ok(RangeMap {
        thresholds: thresholds.to_vec(),
        per_threshold,
        mean,
    })
}
