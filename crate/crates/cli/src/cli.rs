//! Command-line grammar. Every argument struct also serializes, and that
//! serialization is the canonical `inputs` echo of a report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quantune::{Method, RationalLevel, SamplingMode, SourceSpec};
use serde::Serialize;

pub const OUTPUT_DIR_ENV: &str = "QUANTUNE_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "quantune",
    version,
    about = "Sample sizes, threshold estimates and validation runs for detectors with a target false alarm rate",
    after_help = "Exit codes: 0 ok, 2 usage, 3 mathematical precondition, 4 data, 5 I/O.\n\
                  Reports go to stdout, to --output, or to $QUANTUNE_OUTPUT_DIR/<command>.<format>."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Training sample size required by each guarantee.
    SampleSize(SampleSizeArgs),
    /// Threshold estimate from a sample file.
    Estimate(EstimateArgs),
    /// Monte-Carlo validation against a synthetic source.
    Simulate(SimulateArgs),
    /// Repeated training/test splits over a sample file.
    SplitEval(SplitEvalArgs),
    /// Probability that the m-th of N order statistics lands in the band.
    Coverage(CoverageArgs),
    /// Validation over a list of levels.
    Sweep(SweepArgs),
    /// Write synthetic source output, one value per line.
    Generate(GenerateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SampleSize(_) => "sample-size",
            Command::Estimate(_) => "estimate",
            Command::Simulate(_) => "simulate",
            Command::SplitEval(_) => "split-eval",
            Command::Coverage(_) => "coverage",
            Command::Sweep(_) => "sweep",
            Command::Generate(_) => "generate",
        }
    }
}

fn level(text: &str) -> Result<RationalLevel, String> {
    text.parse().map_err(|e| format!("{e}"))
}

fn source(text: &str) -> Result<SourceSpec, String> {
    text.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Dkw,
    Vp,
    Beta,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dkw => Method::Dkw,
            MethodArg::Vp => Method::Vp,
            MethodArg::Beta => Method::Beta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Dkw,
    Vp,
    Beta,
    All,
}

impl MethodChoice {
    pub fn methods(self) -> Vec<Method> {
        match self {
            MethodChoice::Dkw => vec![Method::Dkw],
            MethodChoice::Vp => vec![Method::Vp],
            MethodChoice::Beta => vec![Method::Beta],
            MethodChoice::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    IidFresh,
    SequentialTrajectory,
    RandomSubsample,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::IidFresh => SamplingMode::IidFresh,
            ModeArg::SequentialTrajectory => SamplingMode::SequentialTrajectory,
            ModeArg::RandomSubsample => SamplingMode::RandomSubsample,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Report destination; stdout when absent and $QUANTUNE_OUTPUT_DIR is unset.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// JSON keeps full fidelity; CSV is a flat view.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GuaranteeArgs {
    /// Target no-alarm probability as a decimal or a fraction n1/n2.
    #[arg(long, value_parser = level)]
    pub gamma: RationalLevel,
    /// Accuracy of the achieved level.
    #[arg(long)]
    pub epsilon: f64,
    /// Allowed probability of missing the accuracy.
    #[arg(long)]
    pub rho: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    /// One value per line, or a CSV file when --column is given.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column by header name or 0-based position.
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleSizeArgs {
    #[arg(long, value_enum, default_value_t = MethodChoice::All)]
    pub method: MethodChoice,
    #[command(flatten)]
    #[serde(flatten)]
    pub guarantee: GuaranteeArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_parser = level)]
    pub gamma: RationalLevel,
    /// Interpolation weight on the lower order statistic, in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrialArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Number of threshold estimates N_T.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Master seed; all randomness derives from it.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = quantune::harness::DEFAULT_BIN_WIDTH)]
    pub bin_width: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Source spec: uniform, chi2:dof=K, levy, cusum:delta=D,dim=K,
    /// gauss:dim=K[,mean=..][,cov=..], wcusum:delta=D,dim=K[,mean=..][,cov=..][,calib=C][,burn=B].
    #[arg(long, value_parser = source)]
    pub source: SourceSpec,
    #[command(flatten)]
    #[serde(flatten)]
    pub guarantee: GuaranteeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub trials: TrialArgs,
    /// Validation draws per run, or the stored data set size for random-subsample.
    #[arg(long, default_value_t = 1_000_000)]
    pub validation_size: usize,
    /// Defaults to iid-fresh, or sequential-trajectory for CUSUM sources.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SplitEvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub guarantee: GuaranteeArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoverageArgs {
    /// Order statistic index.
    #[arg(long)]
    pub m: u64,
    /// Number of samples.
    #[arg(long = "N", id = "N")]
    #[serde(rename = "N")]
    pub n: u64,
    #[arg(long, value_parser = level)]
    pub gamma: RationalLevel,
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["input", "source"])))]
pub struct SweepArgs {
    /// Comma-separated levels, each a decimal or a fraction.
    #[arg(long, value_parser = level, value_delimiter = ',', required = true)]
    pub gammas: Vec<RationalLevel>,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub rho: f64,
    /// Repeated splits over this file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, requires = "input")]
    pub column: Option<String>,
    /// Monte-Carlo runs against this source.
    #[arg(long, value_parser = source)]
    pub source: Option<SourceSpec>,
    #[arg(long, default_value_t = 1_000_000)]
    pub validation_size: usize,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    #[serde(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_parser = source)]
    pub source: SourceSpec,
    #[arg(long)]
    pub length: usize,
    #[arg(long)]
    pub seed: u64,
    /// Data file destination; stdout when absent.
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}
