//! Evaluation runs, LR/SR comparison, batch upscaling, timing and report
//! emission. The CLI is a thin layer over these functions.

mod compare;
mod config;
mod evaluate;
mod plot;
mod report;
mod split_cmd;
mod synth;
mod timing;
mod upscale;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataio::{ParseError, RasterError, SplitError};
use crate::metrics::MetricsError;
use crate::srcore::SrError;

pub use compare::{compare_runs, compare_summaries, ComparisonReport, MetricDeltas, RunSummary};
pub use config::{OperatingSpec, RunConfig, TimingSource, TrainingProvenance};
pub use evaluate::{
    load_images, run_evaluation, EvalReport, ImageEntry, ReportOperatingPoint, SCHEMA_VERSION,
};
pub use plot::{emit_pr_plot, PlotOutput};
pub use report::{emit_comparison, emit_report, parse_report, ReportFormat};
pub use split_cmd::split_command;
pub use synth::{jitter_detections, oracle_detections, write_synth_corpus, SynthCorpus, SynthSpec};
pub use timing::{bench_command, quote_path, BenchFailure, BenchOutcome, TimingStats};
pub use upscale::{find_image, list_images, upscale_dir, UpscaleMethod, UpscaleOutcome};

pub const TOOL_VERSION: &str = concat!("srdet ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Raster { path: PathBuf, source: RasterError },
    #[error("{}: {msg}", path.display())]
    Json { path: PathBuf, msg: String },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Sr(#[from] SrError),
}

impl PipelineError {
    /// Process exit status: 1 for validation and configuration problems,
    /// 2 for malformed input data.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Parse { .. }
            | PipelineError::Raster { .. }
            | PipelineError::Json { .. } => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| PipelineError::Json {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

pub(crate) fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}
