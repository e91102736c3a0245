use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::upscale::UpscaleMethod;
use super::{read_json, PipelineError, Result};
use crate::dataio::{DetFormat, SplitName};
use crate::metrics::{ApMode, IouRange, OperatingMode};

/// Hyperparameters of the detector training run behind the detections.
/// Echoed into reports as metadata only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingProvenance {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub warmup_epochs: u32,
    pub warmup_momentum: f64,
    pub warmup_bias_lr: f64,
    pub batch_size: u32,
    pub epochs: u32,
    pub notes: Option<String>,
}

impl Default for TrainingProvenance {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            momentum: 0.934,
            weight_decay: 0.0005,
            warmup_epochs: 3,
            warmup_momentum: 0.8,
            warmup_bias_lr: 0.1,
            batch_size: 12,
            epochs: 150,
            notes: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum OperatingSpec {
    #[default]
    MaxF1,
    FixedConfidence {
        confidence: f64,
    },
}

impl From<OperatingSpec> for OperatingMode {
    fn from(s: OperatingSpec) -> Self {
        match s {
            OperatingSpec::MaxF1 => OperatingMode::MaxF1,
            OperatingSpec::FixedConfidence { confidence } => {
                OperatingMode::FixedConfidence(confidence)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TimingSource {
    #[default]
    None,
    /// Shell command run once per image, `{image}` replaced by the path.
    Command { template: String, repetitions: u32 },
    /// Time the built-in upscaler on every image.
    Upscaler {
        method: UpscaleMethod,
        factor: u32,
        weights: Option<PathBuf>,
    },
}

/// Everything a run needs. Relative paths are taken relative to the current
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub label: Option<String>,
    /// Split manifest. Without one, every `*.txt` in `gt_dir` is evaluated.
    pub manifest: Option<PathBuf>,
    pub split: SplitName,
    pub gt_dir: PathBuf,
    pub det_dir: PathBuf,
    pub image_dir: Option<PathBuf>,
    pub det_format: DetFormat,
    pub num_classes: Option<u32>,
    /// Threshold for the PR curve, operating point and per-image counts.
    pub iou: f64,
    pub iou_range: IouRange,
    pub ap_mode: ApMode,
    pub operating_point: OperatingSpec,
    pub timing: TimingSource,
    pub out_dir: Option<PathBuf>,
    pub training: TrainingProvenance,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: None,
            manifest: None,
            split: SplitName::Test,
            gt_dir: PathBuf::from("labels"),
            det_dir: PathBuf::from("detections"),
            image_dir: None,
            det_format: DetFormat::ConfFirst,
            num_classes: None,
            iou: 0.5,
            iou_range: IouRange::COCO,
            ap_mode: ApMode::Raw,
            operating_point: OperatingSpec::MaxF1,
            timing: TimingSource::None,
            out_dir: None,
            training: TrainingProvenance::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    /// Thresholds of the averaged range.
    pub fn range_thresholds(&self) -> Result<Vec<f64>> {
        Ok(self.iou_range.thresholds()?)
    }

    /// Value checks plus existence of every referenced input path.
    pub fn validate(&self) -> Result<()> {
        if !(self.iou > 0.0 && self.iou <= 1.0) {
            return Err(PipelineError::Config(format!(
                "--iou {} outside (0, 1]",
                self.iou
            )));
        }
        self.range_thresholds()?;
        if let OperatingSpec::FixedConfidence { confidence } = self.operating_point {
            if !(0.0..=1.0).contains(&confidence) {
                return Err(PipelineError::Config(format!(
                    "operating confidence {confidence} outside [0, 1]"
                )));
            }
        }
        let mut dirs = vec![
            ("ground-truth directory", &self.gt_dir),
            ("detection directory", &self.det_dir),
        ];
        if let Some(d) = &self.image_dir {
            dirs.push(("image directory", d));
        }
        for (what, d) in dirs {
            if !d.is_dir() {
                return Err(PipelineError::Config(format!(
                    "{what} {} not found",
                    d.display()
                )));
            }
        }
        if let Some(m) = &self.manifest {
            if !m.is_file() {
                return Err(PipelineError::Config(format!(
                    "manifest {} not found",
                    m.display()
                )));
            }
        }
        match &self.timing {
            TimingSource::None => {}
            TimingSource::Command { template, .. } => {
                if self.image_dir.is_none() {
                    return Err(PipelineError::Config(
                        "command timing needs image_dir".into(),
                    ));
                }
                if !template.contains("{image}") {
                    return Err(PipelineError::Config(
                        "timing command must contain {image}".into(),
                    ));
                }
            }
            TimingSource::Upscaler { weights, .. } => {
                if self.image_dir.is_none() {
                    return Err(PipelineError::Config(
                        "upscaler timing needs image_dir".into(),
                    ));
                }
                if let Some(w) = weights {
                    if !w.is_file() {
                        return Err(PipelineError::Config(format!(
                            "weights file {} not found",
                            w.display()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
