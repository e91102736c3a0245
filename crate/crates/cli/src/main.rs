use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use srdet_core::dataio::{DetFormat, SplitName, SplitSpec};
use srdet_core::metrics::{ApMode, IouRange};
use srdet_core::pipeline::{
    bench_command, compare_runs, emit_comparison, emit_pr_plot, emit_report, list_images,
    parse_report, run_evaluation, split_command, upscale_dir, write_synth_corpus, EvalReport,
    OperatingSpec, PipelineError, ReportFormat, RunConfig, SynthSpec, TimingSource, UpscaleMethod,
};
use srdet_core::Execution;

const EXIT_VALIDATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "srdet",
    version,
    about = "Detection evaluation harness for LR vs super-resolved imagery"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Global {
    /// JSON run configuration; command-line flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// IoU threshold for the PR curve, operating point and per-image counts
    #[arg(long, global = true)]
    iou: Option<f64>,
    /// Averaged IoU range as lo:hi:step
    #[arg(long, global = true)]
    iou_range: Option<IouRange>,
    /// raw | interp
    #[arg(long, global = true)]
    ap_mode: Option<ApMode>,
    /// Detection column order: conf-first | conf-last
    #[arg(long, global = true)]
    det_format: Option<DetFormat>,
    /// json | csv
    #[arg(long, global = true)]
    format: Option<ReportFormat>,
    /// Output directory (stdout when omitted, where possible)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Disable the thread pool
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Score a detection run against ground truth
    Evaluate(EvaluateArgs),
    /// Pair an LR and an SR report and compute SR - LR deltas
    Compare {
        lr: PathBuf,
        sr: PathBuf,
        #[arg(long, default_value = "")]
        label: String,
    },
    /// Upscale every PPM/PGM image in a directory into --out
    Upscale {
        input: PathBuf,
        /// nearest | bilinear | bicubic | rrdb
        #[arg(long, default_value = "bicubic")]
        method: UpscaleMethod,
        #[arg(long, default_value_t = 4)]
        factor: u32,
        /// Generator weights, required for rrdb
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Time an external command per image; {image} is replaced by the path
    Bench {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        cmd: String,
        #[arg(long, default_value_t = 1)]
        reps: u32,
    },
    /// Write a seeded train/val/test manifest
    Split {
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Proportions a:b:c
        #[arg(long, conflicts_with = "counts")]
        ratio: Option<String>,
        /// Exact sizes train:val:test
        #[arg(long)]
        counts: Option<String>,
    },
    /// PR curve of a report as SVG plus CSV points
    Plot { report: PathBuf },
    /// Generate a synthetic corpus with jittered detection sets
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 60)]
        images: usize,
        /// Comma-separated jitter levels
        #[arg(long, value_delimiter = ',', default_value = "0,0.02,0.05,0.1,0.15")]
        levels: Vec<f64>,
    },
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    det: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// train | val | test | all
    #[arg(long)]
    split: Option<SplitName>,
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    num_classes: Option<u32>,
    /// Report precision/recall at this confidence instead of max F1
    #[arg(long)]
    conf: Option<f64>,
    /// Time this command per image ({image} placeholder); needs --images
    #[arg(long)]
    bench_cmd: Option<String>,
    #[arg(long, default_value_t = 1)]
    reps: u32,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        message: message.into(),
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_VALIDATION } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let g = &cli.global;
    let exec = if g.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Cmd::Evaluate(args) => evaluate(g, args, exec),
        Cmd::Compare { lr, sr, label } => compare(g, &lr, &sr, &label),
        Cmd::Upscale {
            input,
            method,
            factor,
            weights,
        } => {
            let out = g
                .out
                .as_deref()
                .ok_or_else(|| invalid("upscale needs --out"))?;
            let res = upscale_dir(&input, out, method, factor, weights.as_deref(), exec)?;
            for (path, msg) in &res.skipped {
                eprintln!("skipped {}: {msg}", path.display());
            }
            let json = serde_json::to_string_pretty(&res.timing).expect("timing serializes");
            println!("{json}");
            Ok(if res.skipped.is_empty() {
                0
            } else {
                EXIT_PARTIAL
            })
        }
        Cmd::Bench { images, cmd, reps } => {
            let list = list_images(&images)?;
            let res = bench_command(&cmd, &list, reps)?;
            if res.no_images {
                eprintln!("warning: no images in {}", images.display());
            }
            for f in &res.failures {
                eprintln!("failed: {}", f.message);
            }
            emit(
                g,
                "bench.json",
                serde_json::to_string_pretty(&res).expect("bench serializes") + "\n",
            )?;
            Ok(if res.failures.is_empty() {
                0
            } else {
                EXIT_PARTIAL
            })
        }
        Cmd::Split {
            images,
            labels,
            ratio,
            counts,
        } => {
            let spec = match (ratio, counts) {
                (_, Some(c)) => SplitSpec::parse_counts(&c),
                (Some(r), None) => r.parse(),
                (None, None) => Ok(SplitSpec::DEFAULT_RATIO),
            }
            .map_err(|e| invalid(e.to_string()))?;
            let seed = g.seed.unwrap_or(0);
            let manifest = split_command(&images, &labels, spec, seed)?;
            emit(g, "manifest.json", manifest.to_json())?;
            Ok(0)
        }
        Cmd::Plot { report } => {
            let r = read_report(&report)?;
            let plot = emit_pr_plot(&r.curve);
            if let Some(w) = &plot.warning {
                eprintln!("warning: {w}");
            }
            match &g.out {
                Some(dir) => {
                    write_out(&dir.join("pr_curve.svg"), &plot.svg)?;
                    write_out(&dir.join("pr_curve.csv"), &plot.csv)?;
                }
                None => print!("{}", plot.svg),
            }
            Ok(0)
        }
        Cmd::Synth {
            dir,
            images,
            levels,
        } => {
            let spec = SynthSpec {
                n_images: images,
                seed: g.seed.unwrap_or(0),
                jitter_levels: levels,
                ..SynthSpec::default()
            };
            let corpus = write_synth_corpus(&dir, &spec)?;
            println!(
                "wrote {} images to {}",
                corpus.image_ids.len(),
                dir.display()
            );
            Ok(0)
        }
    }
}

fn evaluate(g: &Global, a: EvaluateArgs, exec: Execution) -> CliResult {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:ident, $v:expr) => {
            if let Some(v) = $v {
                cfg.$field = v.into();
            }
        };
    }
    set!(gt_dir, a.gt);
    set!(det_dir, a.det);
    set!(split, a.split);
    set!(iou, g.iou);
    set!(iou_range, g.iou_range);
    set!(ap_mode, g.ap_mode);
    set!(det_format, g.det_format);
    if a.manifest.is_some() {
        cfg.manifest = a.manifest;
    }
    if a.images.is_some() {
        cfg.image_dir = a.images;
    }
    if a.label.is_some() {
        cfg.label = a.label;
    }
    if a.num_classes.is_some() {
        cfg.num_classes = a.num_classes;
    }
    if let Some(c) = a.conf {
        cfg.operating_point = OperatingSpec::FixedConfidence { confidence: c };
    }
    if let Some(t) = a.bench_cmd {
        cfg.timing = TimingSource::Command {
            template: t,
            repetitions: a.reps,
        };
    }
    if g.out.is_some() {
        cfg.out_dir = g.out.clone();
    }
    let report = run_evaluation(&cfg, exec)?;
    for e in report.per_image.iter().filter(|e| e.error.is_some()) {
        eprintln!("{}: {}", e.image_id, e.error.as_deref().unwrap_or_default());
    }
    let format = g.format.unwrap_or_default();
    let text = emit_report(&report, format);
    match &cfg.out_dir {
        Some(dir) => write_out(&dir.join(format!("report.{}", format.extension())), &text)?,
        None => print!("{text}"),
    }
    Ok(if report.has_errors() { EXIT_PARTIAL } else { 0 })
}

fn compare(g: &Global, lr: &Path, sr: &Path, label: &str) -> CliResult {
    let (lr, sr) = (read_report(lr)?, read_report(sr)?);
    let c = compare_runs(&lr, &sr, label)?;
    let format = g.format.unwrap_or_default();
    emit(
        g,
        &format!("comparison.{}", format.extension()),
        emit_comparison(&c, format),
    )?;
    Ok(0)
}

fn read_report(path: &Path) -> Result<EvalReport, Failure> {
    let text =
        std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    parse_report(&text).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })
}

fn write_out(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| invalid(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Write to `--out/name`, or stdout without `--out`.
fn emit(g: &Global, name: &str, text: String) -> Result<(), Failure> {
    match &g.out {
        Some(dir) => write_out(&dir.join(name), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
