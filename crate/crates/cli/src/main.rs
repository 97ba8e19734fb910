//! `ews`: analyze packet traces for early warning signs of volumetric DDoS
//! attacks, generate synthetic traces, and summarize reports.
//!
//! Exit status: 0 on success, 2 when `analyze` finds at least one Precursor
//! window, 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ews_core::detector::{AnalysisConfig, DetectorConfig};
use ews_core::indicators::{SeriesSource, SkewVariant, TrajectoryConfig};
use ews_core::ingest::{DestId, MAX_DESTS_ENV};
use ews_core::timeseries::{Aggregation, MatrixConfig, WindowConfig};

mod analyze;
mod generate;
mod plot;
mod report;

#[derive(Debug, Parser)]
#[command(name = "ews", version, about = "Early warning indicators for volumetric DDoS attacks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute indicator trajectories and precursor verdicts for a trace.
    Analyze(AnalyzeArgs),
    /// Write a synthetic trace from a scenario file.
    Generate(GenerateArgs),
    /// Print a summary table of a report.json.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Pcap,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggArg {
    Mean,
    Sum,
    Max,
    Count,
}

impl From<AggArg> for Aggregation {
    fn from(a: AggArg) -> Self {
        match a {
            AggArg::Mean => Aggregation::MeanSize,
            AggArg::Sum => Aggregation::SumSize,
            AggArg::Max => Aggregation::MaxSize,
            AggArg::Count => Aggregation::Count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SkewArg {
    /// m3 / m2^(3/2)
    Standard,
    /// m3 / m2^(1/2)
    RootM2,
}

impl From<SkewArg> for SkewVariant {
    fn from(s: SkewArg) -> Self {
        match s {
            SkewArg::Standard => SkewVariant::Standard,
            SkewArg::RootM2 => SkewVariant::RootM2,
        }
    }
}

fn parse_series(s: &str) -> Result<SeriesSource, String> {
    match s {
        "aggregate" => Ok(SeriesSource::Aggregate),
        "raw" => Ok(SeriesSource::RawPerPacket),
        _ => s
            .strip_prefix("dest:")
            .and_then(|id| id.parse().ok())
            .map(|id| SeriesSource::Destination(DestId(id)))
            .ok_or_else(|| format!("expected aggregate, raw or dest:<id>, got {s:?}")),
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Trace file; repeat for consecutive pcap files of one capture.
    #[arg(long = "input", short, required = true)]
    input: Vec<PathBuf>,
    /// Input format; guessed from the first file's extension when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Window length, seconds.
    #[arg(long, default_value_t = WindowConfig::default().window_len_s)]
    window_len: f64,
    /// Window stride, seconds.
    #[arg(long, default_value_t = WindowConfig::default().stride_s)]
    stride: f64,
    /// Sub-window length for the rolling indicators, seconds.
    #[arg(long, default_value_t = TrajectoryConfig::default().sub_len_s)]
    sub_len: f64,
    /// Sub-window stride, seconds.
    #[arg(long, default_value_t = TrajectoryConfig::default().sub_stride_s)]
    sub_stride: f64,
    /// Time bin of the observable matrix, seconds.
    #[arg(long, default_value_t = MatrixConfig::default().bin_width_s)]
    bin_width: f64,
    /// How packets in one bin are combined.
    #[arg(long, value_enum, default_value_t = AggArg::Mean)]
    agg: AggArg,
    /// Destinations with fewer packets in a window are dropped from its matrix.
    #[arg(long, default_value_t = MatrixConfig::default().min_samples)]
    min_samples: usize,
    /// Skewness normalization.
    #[arg(long, value_enum, default_value_t = SkewArg::Standard)]
    skew: SkewArg,
    /// Series for ac1, cv and skewness: aggregate, raw, or dest:<id>.
    #[arg(long, value_parser = parse_series, default_value = "aggregate")]
    series: SeriesSource,
    /// Remove a linear trend from every sub-window.
    #[arg(long)]
    detrend: bool,
    /// Minimum |Kendall tau| for a trend to count.
    #[arg(long, default_value_t = DetectorConfig::default().tau_min)]
    tau_min: f64,
    /// Minimum fraction of valid samples per indicator.
    #[arg(long, default_value_t = DetectorConfig::default().min_valid)]
    min_valid: f64,
    /// Only use the last N samples of each trajectory for the trend.
    #[arg(long)]
    suffix: Option<usize>,
    /// Monitored (victim) address; repeatable. Default: keep every packet.
    #[arg(long)]
    victim: Vec<std::net::IpAddr>,
    /// Also keep packets sent by the victims.
    #[arg(long)]
    both_directions: bool,
    /// Write one SVG per analyzed window.
    #[arg(long)]
    plots: bool,
    /// Write each window's observable matrix as CSV.
    #[arg(long)]
    dump_matrices: bool,
    #[arg(long, default_value = "ews-out")]
    out_dir: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    jobs: Option<usize>,
    /// Distinct destination cap.
    #[arg(long, env = MAX_DESTS_ENV, hide_env_values = true)]
    max_dests: Option<usize>,
}

impl AnalyzeArgs {
    fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            window: WindowConfig { window_len_s: self.window_len, stride_s: self.stride },
            matrix: MatrixConfig { bin_width_s: self.bin_width, agg: self.agg.into(), min_samples: self.min_samples },
            trajectory: TrajectoryConfig {
                sub_len_s: self.sub_len,
                sub_stride_s: self.sub_stride,
                series: self.series,
                skew: self.skew.into(),
                detrend: self.detrend,
            },
            detector: DetectorConfig { tau_min: self.tau_min, min_valid: self.min_valid, suffix: self.suffix },
        }
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    spec: PathBuf,
    /// Output trace CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// report.json written by `ews analyze`.
    report: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => analyze::run(&args),
        Command::Generate(args) => generate::run(&args).map(|()| ExitCode::SUCCESS),
        Command::Report(args) => report::run(&args).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
