//! Command-line front end: ingest, render plots, extract features, run and
//! compare experiments. Commands are plain functions so they can be driven
//! from tests.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rphar::descriptors::DescriptorKind;
use rphar::rp::{Polarity, RpConfig};
use rphar::RpVariant;

pub use commands::{
    cmd_compare, cmd_extract, cmd_ingest, cmd_render_rp, cmd_report, cmd_run, IngestRequest,
    RenderRequest, Stamp,
};
pub use config::{expand_sweep, ExperimentConfig, SweepAxis};
pub use error::{CliError, CliResult, EXIT_DATA, EXIT_OK, EXIT_PROTOCOL, EXIT_USAGE};

use config::{AssignmentMode, DatasetFormat, PoolingMode};

fn parse_variant(s: &str) -> Result<RpVariant, String> {
    RpVariant::parse(s).ok_or_else(|| format!("expected gray, gray-concat or rgb, got {s:?}"))
}

fn parse_descriptor(s: &str) -> Result<DescriptorKind, String> {
    DescriptorKind::parse(s)
        .ok_or_else(|| format!("expected sift, rgb-sift, opponent-sift or rgb-hist, got {s:?}"))
}

fn snake<T: serde::de::DeserializeOwned>(s: &str, what: &str) -> Result<T, String> {
    let v = s.to_ascii_lowercase().replace('-', "_");
    serde_json::from_value(serde_json::Value::String(v)).map_err(|_| format!("invalid {what} {s:?}"))
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    snake(s, "format (canonical|wharf)")
}

fn parse_polarity(s: &str) -> Result<Polarity, String> {
    snake(s, "polarity (dark-recurrent|light-recurrent)")
}

fn parse_assignment(s: &str) -> Result<AssignmentMode, String> {
    snake(s, "assignment (hard|soft)")
}

fn parse_pooling(s: &str) -> Result<PoolingMode, String> {
    snake(s, "pooling (average|max|max-spm)")
}

#[derive(Debug, Parser)]
#[command(name = "rphar", version, about = "Activity recognition from recurrence-plot textures")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a dataset into the canonical CSV layout with a manifest.
    Ingest(IngestArgs),
    /// Render recurrence plots as PNG files.
    RenderRp(RenderArgs),
    /// Export the feature matrix of one run as CSV.
    Extract(ExtractArgs),
    /// Run an experiment (or a sweep) and write its report.
    Run(RunArgs),
    /// Paired per-class comparison of two reports.
    Compare(CompareArgs),
    /// Rewrite tables and figures of a saved report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "wharf", value_parser = parse_format)]
    pub format: DatasetFormat,
    #[arg(long)]
    pub output: PathBuf,
    /// Classes to leave out, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub drop: Vec<String>,
    #[arg(long, default_value_t = rphar::ingest::WHARF_SAMPLE_RATE_HZ)]
    pub sample_rate: f64,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value = "canonical", value_parser = parse_format)]
    pub format: DatasetFormat,
    #[arg(long, default_value_t = rphar::ingest::WHARF_SAMPLE_RATE_HZ)]
    pub sample_rate: f64,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "rgb", value_parser = parse_variant)]
    pub variant: RpVariant,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Threshold; omit for the distance plot.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value = "dark-recurrent", value_parser = parse_polarity)]
    pub polarity: Polarity,
    /// Sample ids to render, comma separated (default: all).
    #[arg(long, value_delimiter = ',')]
    pub samples: Vec<String>,
    /// Also write one contact sheet per class with up to N plots.
    #[arg(long)]
    pub gallery: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub columns: usize,
}

/// Config file plus per-key overrides; flags win over the file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// Experiment config (TOML); defaults apply to missing keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
    #[arg(long, value_delimiter = ',')]
    pub drop: Option<Vec<String>>,
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// `bovw` or a baseline name.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long, value_parser = parse_variant)]
    pub variant: Option<RpVariant>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_parser = parse_polarity)]
    pub polarity: Option<Polarity>,
    #[arg(long, value_parser = parse_descriptor)]
    pub descriptor: Option<DescriptorKind>,
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub patch: Option<usize>,
    #[arg(long)]
    pub hist_bins: Option<usize>,
    #[arg(long)]
    pub codebook_size: Option<usize>,
    #[arg(long)]
    pub codebook_seed: Option<u64>,
    #[arg(long, value_parser = parse_assignment)]
    pub assignment: Option<AssignmentMode>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_parser = parse_pooling)]
    pub pooling: Option<PoolingMode>,
    #[arg(long, value_delimiter = ',')]
    pub spm_levels: Option<Vec<usize>>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub classifier_seed: Option<u64>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident, $($field:ident => $target:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$target = v; })*
    };
}

impl ConfigArgs {
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let a = self;
        overlay!(cfg, a,
            dataset => dataset, format => format, drop => drop, sample_rate => sample_rate_hz,
            method => method, variant => variant, m => m, d => d, polarity => polarity,
            descriptor => descriptor, stride => stride, patch => patch, hist_bins => hist_bins,
            codebook_size => codebook_size, codebook_seed => codebook_seed,
            assignment => assignment, sigma => sigma, pooling => pooling, spm_levels => spm_levels,
            c => c, epochs => epochs, tolerance => tolerance, classifier_seed => classifier_seed,
            per_class => per_class, runs => runs, master_seed => master_seed, alpha => alpha,
            output => output,
        );
        if let Some(eps) = self.epsilon {
            cfg.epsilon = Some(eps);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Which run's split (and codebook) to use.
    #[arg(long, default_value_t = 0)]
    pub run: usize,
    /// Feature CSV path; BoVW also writes `<stem>.codebook.csv`.
    #[arg(long = "features", default_value = "features.csv")]
    pub features: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Sweep axis `key=v1,v2,...`; repeat for a cross-product.
    #[arg(long)]
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report file or run directory of method A.
    pub a: PathBuf,
    /// Report file or run directory of method B.
    pub b: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Write a bar chart of the per-class differences.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report file or run directory.
    pub report: PathBuf,
    /// Where to write (default: next to the report).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Ingest(a) => {
            let req = IngestRequest {
                input: a.input.clone(),
                format: a.format,
                output: a.output.clone(),
                drop: a.drop.clone(),
                sample_rate_hz: a.sample_rate,
            };
            cmd_ingest(&req, out).map(drop)
        }
        Command::RenderRp(a) => {
            let req = RenderRequest {
                dataset: a.dataset.clone(),
                format: a.format,
                sample_rate_hz: a.sample_rate,
                output: a.output.clone(),
                variant: a.variant,
                rp: RpConfig {
                    m: a.m,
                    d: a.d,
                    epsilon: a.epsilon,
                    polarity: a.polarity,
                },
                samples: a.samples.clone(),
                gallery: a.gallery,
                columns: a.columns.max(1),
            };
            cmd_render_rp(&req, out).map(drop)
        }
        Command::Extract(a) => cmd_extract(&a.config.resolve()?, a.run, &a.features, out).map(drop),
        Command::Run(a) => cmd_run(&a.config.resolve()?, &a.sweep, out).map(drop),
        Command::Compare(a) => {
            if !(a.alpha > 0.0 && a.alpha < 1.0) {
                return Err(CliError::Usage(format!("alpha must be in (0, 1), got {}", a.alpha)));
            }
            cmd_compare(&a.a, &a.b, a.alpha, a.plot.as_deref(), out).map(drop)
        }
        Command::Report(a) => cmd_report(&a.report, a.output.as_deref(), out).map(drop),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_DATA;
        }
    };
    let stdout = std::io::stdout();
    let result = pool.install(|| execute(&cli, &mut stdout.lock()));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
