use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};

/// Wall-clock seconds per image. Summary fields are `None` when there are no
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples: Vec<f64>,
    pub count: usize,
    pub sum: f64,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl TimingStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let count = samples.len();
        let sum: f64 = samples.iter().sum();
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let median = match count {
            0 => None,
            n if n % 2 == 1 => Some(sorted[n / 2]),
            n => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
        };
        Self {
            count,
            sum,
            mean: (count > 0).then(|| sum / count as f64),
            median,
            min: sorted.first().copied(),
            max: sorted.last().copied(),
            samples,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchFailure {
    pub image: PathBuf,
    pub repetition: u32,
    /// Exit code, `None` if killed by a signal or never started.
    pub status: Option<i32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchOutcome {
    pub stats: TimingStats,
    pub failures: Vec<BenchFailure>,
    /// Set when no image was given, so nothing was measured.
    pub no_images: bool,
}

/// Single-quote `path` for `sh`.
pub fn quote_path(path: &Path) -> String {
    format!("'{}'", path.to_string_lossy().replace('\'', r"'\''"))
}

fn run_once(template: &str, image: &Path) -> std::result::Result<f64, (Option<i32>, String)> {
    let cmd = template.replace("{image}", &quote_path(image));
    let start = Instant::now();
    let status = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| (None, e.to_string()))?;
    let secs = start.elapsed().as_secs_f64();
    if status.success() {
        Ok(secs)
    } else {
        Err((status.code(), format!("`{cmd}` exited with {status}")))
    }
}

/// Time `template` once per image and repetition, strictly one invocation at
/// a time. One untimed warm-up run on the first image precedes the
/// measurements. Failed invocations are reported and left out of the stats.
pub fn bench_command(template: &str, images: &[PathBuf], repetitions: u32) -> Result<BenchOutcome> {
    if !template.contains("{image}") {
        return Err(PipelineError::Config(
            "bench command must contain the {image} placeholder".into(),
        ));
    }
    if repetitions == 0 {
        return Err(PipelineError::Config(
            "repetitions must be at least 1".into(),
        ));
    }
    let Some(first) = images.first() else {
        return Ok(BenchOutcome {
            stats: TimingStats::from_samples(Vec::new()),
            failures: Vec::new(),
            no_images: true,
        });
    };
    let _ = run_once(template, first);
    let mut samples = Vec::with_capacity(images.len() * repetitions as usize);
    let mut failures = Vec::new();
    for repetition in 0..repetitions {
        for image in images {
            match run_once(template, image) {
                Ok(s) => samples.push(s),
                Err((status, message)) => failures.push(BenchFailure {
                    image: image.clone(),
                    repetition,
                    status,
                    message,
                }),
            }
        }
    }
    Ok(BenchOutcome {
        stats: TimingStats::from_samples(samples),
        failures,
        no_images: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_arithmetic() {
        let s = TimingStats::from_samples(vec![0.3, 0.1, 0.2, 0.6]);
        assert_eq!(s.count, 4);
        assert!((s.sum - 1.2).abs() < 1e-15);
        assert!((s.mean.unwrap() - 0.3).abs() < 1e-15);
        assert!((s.median.unwrap() - 0.25).abs() < 1e-15);
        assert_eq!((s.min, s.max), (Some(0.1), Some(0.6)));
        assert_eq!(
            TimingStats::from_samples(vec![2.0, 1.0, 3.0]).median,
            Some(2.0)
        );
        let e = TimingStats::from_samples(vec![]);
        assert!(e.is_empty() && e.mean.is_none() && e.median.is_none());
    }

    #[test]
    fn quoting() {
        assert_eq!(quote_path(Path::new("/a b/c.ppm")), "'/a b/c.ppm'");
        assert_eq!(quote_path(Path::new("it's")), r"'it'\''s'");
    }

    #[test]
    fn failures_are_recorded_not_timed() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("ok.ppm");
        std::fs::write(&good, b"x").unwrap();
        let missing = dir.path().join("missing one.ppm");
        let out = bench_command("test -f {image}", &[good.clone(), missing.clone()], 2).unwrap();
        assert_eq!(out.stats.count, 2);
        assert_eq!(out.failures.len(), 2);
        assert!(out
            .failures
            .iter()
            .all(|f| f.image == missing && f.status == Some(1)));
    }

    #[test]
    fn argument_checks() {
        assert!(bench_command("true", &[], 1).is_err());
        assert!(bench_command("true {image}", &[], 0).is_err());
        let out = bench_command("true {image}", &[], 3).unwrap();
        assert!(out.no_images && out.stats.is_empty());
    }
}
