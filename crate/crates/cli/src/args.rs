use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use deviatile::data_io::ReportFormat;
use deviatile::risk_core::Measure;

#[derive(Debug, Parser)]
#[command(name = "deviatile", version, about = "Deviatile risk measures for heavy-tailed losses")]
pub struct Cli {
    /// Worker threads for replicate loops (0 = one per core). Never changes results.
    #[arg(long, global = true, env = "DEVIATILE_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Output file; stdout when omitted.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,

    /// Report format: dsv (comma separated) or structured (JSON).
    #[arg(long, global = true, default_value = "dsv", value_parser = parse_format)]
    pub format: ReportFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// True deviatile against its first- and second-order expansions over a level grid.
    Expand(ExpandArgs),
    /// Exact (or Monte-Carlo, for GARCH) risk measures of a model.
    TrueValue(TrueValueArgs),
    /// Run a sweep of Monte-Carlo experiments from a TOML config.
    Simulate(SimulateArgs),
    /// VaR, expectile, ES and deviatile estimates on a loss series.
    Estimate(EstimateArgs),
    /// Hill estimates over a range of k.
    HillPlot(HillPlotArgs),
    /// Stationary block-bootstrap intervals over a range of k.
    Bootstrap(BootstrapArgs),
    /// Write the synthetic GARCH loss series.
    Fixture(FixtureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Pareto,
    StudentT,
    Garch,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    /// Tail index α (Pareto shape or Student-t degrees of freedom).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Pareto scale.
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[command(flatten)]
    pub garch: GarchArgs,
}

/// GARCH(1,1) parameters; unset values take the fitted S&P 500 defaults.
#[derive(Debug, Args)]
pub struct GarchArgs {
    #[arg(long)]
    pub a0: Option<f64>,
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b0: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Order {
    First,
    Second,
    Both,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.95)]
    pub tau_min: f64,
    #[arg(long, default_value_t = 0.999)]
    pub tau_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Explicit levels; replaces the evenly spaced grid.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    #[arg(long, value_enum, default_value_t = Order::Both)]
    pub order: Order,
}

#[derive(Debug, Args)]
pub struct TrueValueArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub levels: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "deviatile", value_parser = parse_measure)]
    pub measures: Vec<Measure>,
    /// Monte-Carlo paths (GARCH only).
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long, default_value_t = 100_000)]
    pub path_length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML sweep description.
    #[arg(long)]
    pub config: PathBuf,
    /// Override the replicate count of every row.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub title: Option<String>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file of dated prices or losses.
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub data: Option<PathBuf>,
    /// Use the built-in synthetic GARCH series instead of a file.
    #[arg(long)]
    pub fixture: bool,
    #[arg(long, default_value = "date")]
    pub date_column: String,
    /// Price column; losses are negative log returns.
    #[arg(long, conflicts_with = "returns")]
    pub prices: Option<String>,
    /// Loss column used as is (default `loss`).
    #[arg(long)]
    pub returns: Option<String>,
    /// Multiply the losses by this factor (e.g. 100 for percent).
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Keep observations dated on or after this day.
    #[arg(long)]
    pub from: Option<String>,
    /// Keep observations dated before this day.
    #[arg(long)]
    pub until: Option<String>,
}

/// Either a single `k` or an inclusive range `a:b`.
#[derive(Debug, Args)]
pub struct KArgs {
    #[arg(long, conflicts_with = "k_range", required_unless_present = "k_range")]
    pub k: Option<usize>,
    #[arg(long, value_parser = parse_range)]
    pub k_range: Option<KRange>,
}

impl KArgs {
    pub fn values(&self) -> Vec<usize> {
        match (self.k, self.k_range) {
            (Some(k), _) => vec![k],
            (None, Some(r)) => (r.min..=r.max).collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CiKind {
    None,
    Asymptotic,
    Bootstrap,
}

#[derive(Debug, Args)]
pub struct BootArgs {
    #[arg(long, default_value_t = 200.0)]
    pub mean_block: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, default_value_t = 0.95)]
    pub coverage: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.95,0.99,0.999")]
    pub levels: Vec<f64>,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, value_delimiter = ',', default_value = "var,expectile,es,deviatile", value_parser = parse_measure)]
    pub measures: Vec<Measure>,
    /// Base level for extrapolated estimates.
    #[arg(long, default_value_t = 0.95)]
    pub base_tau: f64,
    /// Levels above the base level with fewer exceedances than this are extrapolated.
    #[arg(long, default_value_t = 10)]
    pub min_exceedances: usize,
    /// Interval for the deviatile column.
    #[arg(long, value_enum, default_value_t = CiKind::None)]
    pub ci: CiKind,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Args)]
pub struct HillPlotArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = parse_range)]
    pub k_range: KRange,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub k: KArgs,
    #[arg(long, default_value = "deviatile", value_parser = parse_measure)]
    pub measure: Measure,
    #[arg(long, default_value_t = 0.95)]
    pub tau: f64,
    /// Extreme level reached by extrapolation from `tau`.
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub boot: BootArgs,
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = deviatile::data_io::FIXTURE_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = deviatile::data_io::FIXTURE_LEN)]
    pub n: usize,
    #[arg(long, default_value = deviatile::data_io::FIXTURE_START)]
    pub start: String,
    #[command(flatten)]
    pub garch: GarchArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub min: usize,
    pub max: usize,
}

fn parse_range(s: &str) -> Result<KRange, String> {
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (a, b),
        None => (s, s),
    };
    let min = usize::from_str(a.trim()).map_err(|e| format!("bad range start `{a}`: {e}"))?;
    let max = usize::from_str(b.trim()).map_err(|e| format!("bad range end `{b}`: {e}"))?;
    if min == 0 || min > max {
        return Err(format!("range must satisfy 1 <= start <= end, got {min}:{max}"));
    }
    Ok(KRange { min, max })
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    Measure::from_str(s).map_err(|e| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    ReportFormat::from_str(s).map_err(|e| e.to_string())
}
