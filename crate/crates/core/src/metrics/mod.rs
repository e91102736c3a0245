//! Detection scoring: truth-table accounting, precision/recall/F1, PR curves,
//! average precision and mAP over IoU threshold ranges.

mod counts;
mod curve;
mod matching;

use thiserror::Error;

pub use counts::{f1, precision, recall, ConfusionCounts, Rate};
pub use curve::{
    average_precision, classes_in, map_from_matches, map_over_range, match_images, mean_ap,
    operating_point, pr_curve, ApMode, ApResult, ImageBoxes, IouRange, OperatingMode,
    OperatingPoint, PrCurve, PrPoint, RangeMap,
};
pub use matching::{
    match_boxes, match_detections, IouTable, MatchRecord, MatchResult, ScoredBox, TruthBox,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("mean AP needs at least one class")]
    NoClasses,
    #[error("at least one IoU threshold is required")]
    NoThresholds,
    #[error("IoU threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("invalid IoU range {0:?}")]
    BadRange(IouRange),
}
