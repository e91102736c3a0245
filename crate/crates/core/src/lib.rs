//! Evaluation harness for super-resolution-assisted object detection.
//!
//! - [`boxgeom`]: box coordinates and IoU
//! - [`dataio`]: YOLO label/detection files, dataset splits, PPM/PGM rasters
//! - [`metrics`]: matching, precision/recall/F1, AP and mAP sweeps
//! - [`srcore`]: a small RRDB generator and relativistic adversarial losses
//! - [`pipeline`]: evaluation runs, LR/SR comparison, upscaling, timing, reports

pub mod boxgeom;
pub mod dataio;
pub mod exec;
pub mod metrics;
pub mod pipeline;
pub mod srcore;

pub use exec::Execution;
