//! The `odsg` command line.
//!
//! ```text
//! odsg saliency <IMAGE>... [--out DIR]       maps, overlays, results.json
//! odsg validate --annotations FILE [...]     iof_records.json, violin.csv
//! odsg synth --count N [--seed S] --out DIR  synthetic suite
//! odsg report --records FILE --out DIR       summary.json, violin figures
//! ```
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric or alignment failure.

pub mod config;
mod report;
mod saliency;
mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::detector::{adapter_by_name, DetectorAdapter, SoftMomentDetector, SOFT_MOMENT_NAME};
use crate::error::Error;
use crate::synthetic::{generate_suite, SceneSpec};

pub use config::{RenderOptions, RunConfig};
pub use report::{SummaryFile, SUMMARY_SCHEMA};
pub use saliency::{DetectionResult, ImageResult, MapEntry, MapStatus, ResultsFile, ResultsSummary, RESULTS_SCHEMA};
pub use validate::{RecordsFile, RecordsSummary, RECORDS_SCHEMA, VIOLIN_CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// A command outcome other than success: exit code plus diagnostic.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::UnknownAdapter(_) => EXIT_USAGE,
        Error::InsufficientAlignment { .. }
        | Error::UnstableDetection
        | Error::DegenerateWeights
        | Error::InvalidStep(_) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Self {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

#[derive(Debug, Parser)]
#[command(name = "odsg", version, about = "Per-detection SmoothGrad saliency for object detectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute five saliency maps per detection for each image.
    Saliency(saliency::SaliencyArgs),
    /// Match detections to COCO-style ground truth and score map placement.
    Validate(validate::ValidateArgs),
    /// Write a seeded synthetic scene suite with annotations.
    Synth(SynthArgs),
    /// Aggregate IOF records into summary statistics and violin figures.
    Report(report::ReportArgs),
}

/// Flags mirroring [`RunConfig`]; each one overrides the `--config` file.
#[derive(Debug, Clone, Default, Args)]
pub(crate) struct RunFlags {
    /// JSON RunConfig, or an emitted results file with an embedded `config`.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long = "n-samples", visible_alias = "n")]
    n_samples: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    align_iou: Option<f64>,
    #[arg(long)]
    min_match_fraction: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Compute noisy passes on a thread pool (results do not depend on it).
    #[arg(long)]
    parallel: Option<bool>,
    #[arg(long)]
    filter_sigma: Option<f64>,
    #[arg(long)]
    threshold_factor: Option<f64>,
    #[arg(long)]
    score_threshold: Option<f64>,
    #[arg(long)]
    match_iou: Option<f64>,
    #[arg(long)]
    overlay_alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunFlags {
    pub(crate) fn resolve(&self) -> std::result::Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path).map_err(|e| Failure::data(e.to_string()))?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:ident).+) => {
                if let Some(v) = &self.$flag {
                    cfg.$($field).+ = v.clone();
                }
            };
        }
        set!(adapter => adapter);
        set!(n_samples => smoothgrad.n_samples);
        set!(sigma => smoothgrad.sigma);
        set!(align_iou => smoothgrad.align_iou);
        set!(min_match_fraction => smoothgrad.min_match_fraction);
        set!(seed => smoothgrad.seed);
        set!(parallel => smoothgrad.parallel);
        set!(filter_sigma => binarize.filter_sigma);
        set!(threshold_factor => binarize.threshold_factor);
        set!(score_threshold => score_threshold);
        set!(match_iou => match_iou);
        set!(overlay_alpha => render.overlay_alpha);
        set!(out => output_dir);
        cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }
}

pub(crate) fn build_adapter(cfg: &RunConfig) -> crate::Result<Box<dyn DetectorAdapter>> {
    if cfg.adapter == SOFT_MOMENT_NAME {
        return Ok(Box::new(SoftMomentDetector::new(cfg.soft_moment.clone())?));
    }
    adapter_by_name(&cfg.adapter)
}

pub(crate) fn create_dir(path: &std::path::Path) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(path)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(
    path: &std::path::Path,
    value: &T,
) -> std::result::Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Seed of the first scene; scene k uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    n_blobs: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
}

fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let defaults = SceneSpec::default();
    let template = SceneSpec {
        n_blobs: args.n_blobs.unwrap_or(defaults.n_blobs),
        height: args.height.unwrap_or(defaults.height),
        width: args.width.unwrap_or(defaults.width),
        ..defaults
    };
    template.validate()?;
    generate_suite(&template, args.seed, args.count as usize, &args.out)?;
    println!("{}", args.out.display());
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match &cli.command {
        Command::Saliency(a) => saliency::cmd_saliency(a),
        Command::Validate(a) => validate::cmd_validate(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Report(a) => report::cmd_report(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("odsg: {}", f.message);
            f.code
        }
    }
}
