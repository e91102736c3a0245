use serde::{Deserialize, Serialize};

use super::evaluate::EvalReport;
use super::{PipelineError, Result};
use crate::metrics::ApMode;

/// The headline numbers of one run, one row of an LR/SR table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map_50: f64,
    pub map_range: f64,
    /// Mean seconds per image, when the run was timed.
    pub inference_s: Option<f64>,
    pub iou_threshold: f64,
    pub range_thresholds: Vec<f64>,
    pub ap_mode: ApMode,
}

impl RunSummary {
    pub fn from_report(r: &EvalReport) -> Self {
        Self {
            label: r.config.label.clone().unwrap_or_default(),
            precision: r.operating_point.precision,
            recall: r.operating_point.recall,
            f1: r.f1,
            map_50: r.map_50,
            map_range: r.map_range.mean,
            inference_s: r.timing.as_ref().and_then(|t| t.mean),
            iou_threshold: r.operating_point.iou_threshold,
            range_thresholds: r.map_range.thresholds.clone(),
            ap_mode: r.config.ap_mode,
        }
    }
}

/// `sr − lr` for every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDeltas {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub map_50: f64,
    pub map_range: f64,
    pub inference_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label: String,
    pub lr: RunSummary,
    pub sr: RunSummary,
    pub deltas: MetricDeltas,
}

/// Pair two summaries. They must share the IoU setup and AP mode.
pub fn compare_summaries(label: &str, lr: RunSummary, sr: RunSummary) -> Result<ComparisonReport> {
    if lr.iou_threshold != sr.iou_threshold || lr.range_thresholds != sr.range_thresholds {
        return Err(PipelineError::Config(format!(
            "runs use different IoU thresholds ({} {:?} vs {} {:?})",
            lr.iou_threshold, lr.range_thresholds, sr.iou_threshold, sr.range_thresholds
        )));
    }
    if lr.ap_mode != sr.ap_mode {
        return Err(PipelineError::Config(format!(
            "runs use different AP modes ({} vs {})",
            lr.ap_mode, sr.ap_mode
        )));
    }
    let deltas = MetricDeltas {
        precision: sr.precision - lr.precision,
        recall: sr.recall - lr.recall,
        f1: sr.f1 - lr.f1,
        map_50: sr.map_50 - lr.map_50,
        map_range: sr.map_range - lr.map_range,
        inference_s: lr.inference_s.zip(sr.inference_s).map(|(l, s)| s - l),
    };
    Ok(ComparisonReport {
        label: label.to_string(),
        lr,
        sr,
        deltas,
    })
}

pub fn compare_runs(lr: &EvalReport, sr: &EvalReport, label: &str) -> Result<ComparisonReport> {
    compare_summaries(
        label,
        RunSummary::from_report(lr),
        RunSummary::from_report(sr),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: f64, r: f64, f1: f64, map_50: f64) -> RunSummary {
        RunSummary {
            label: String::new(),
            precision: p,
            recall: r,
            f1,
            map_50,
            map_range: map_50 / 2.0,
            inference_s: Some(0.5),
            iou_threshold: 0.5,
            range_thresholds: vec![0.5, 0.75],
            ap_mode: ApMode::Raw,
        }
    }

    #[test]
    fn deltas_are_sr_minus_lr() {
        let c = compare_summaries(
            "m",
            row(0.79, 0.67, 0.725, 0.73),
            row(0.98, 0.85, 0.910, 0.85),
        )
        .unwrap();
        assert_eq!(c.deltas.map_50, 0.85 - 0.73);
        assert_eq!(c.deltas.precision, 0.98 - 0.79);
        assert_eq!(c.deltas.inference_s, Some(0.0));
    }

    #[test]
    fn self_comparison_is_zero() {
        let r = row(0.8, 0.68, 0.735, 0.7);
        let c = compare_summaries("m", r.clone(), r).unwrap();
        let d = c.deltas;
        assert_eq!(
            [d.precision, d.recall, d.f1, d.map_50, d.map_range],
            [0.0; 5]
        );
    }

    #[test]
    fn mismatched_setups_refused() {
        let a = row(0.8, 0.68, 0.735, 0.7);
        let b = RunSummary {
            range_thresholds: vec![0.5],
            ..a.clone()
        };
        assert!(compare_summaries("m", a.clone(), b).is_err());
        let b = RunSummary {
            iou_threshold: 0.75,
            ..a.clone()
        };
        assert!(compare_summaries("m", a.clone(), b).is_err());
        let b = RunSummary {
            ap_mode: ApMode::Interpolated,
            ..a.clone()
        };
        assert!(compare_summaries("m", a, b).is_err());
    }
}
