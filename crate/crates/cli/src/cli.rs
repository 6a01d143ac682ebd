use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use grasshopper::Algorithm;

use crate::theta::ThetaSpec;

#[derive(Debug, Parser)]
#[command(name = "grasshopper", version, about = "Search antipodal grasshopper colourings on geodesic grids")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a geodesic grid and write it as a GRIDv1 file.
    BuildGrid(BuildGridArgs),
    /// Optimise a colouring for one jumping angle.
    Solve(SolveArgs),
    /// Optimise colourings over a list of jumping angles.
    Sweep(SweepArgs),
    /// Recompute and cross-check the success probability of a colouring.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BuildGridArgs {
    #[arg(long)]
    pub depth: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[group(id = "grid_source", required = true, multiple = false)]
pub struct GridSource {
    /// GRIDv1 file to load.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Build the grid at this depth instead of loading one.
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, Default, Args)]
#[command(group(ArgGroup::new("theta").multiple(false)))]
pub struct ThetaArgs {
    /// Jumping angle(s) in radians, comma separated.
    #[arg(long, group = "theta", value_delimiter = ',', allow_negative_numbers = true)]
    pub theta_rad: Vec<f64>,
    /// Jumping angle(s) as fractions of pi.
    #[arg(long, group = "theta", value_delimiter = ',', allow_negative_numbers = true)]
    pub theta_frac: Vec<f64>,
    /// Jumping angle(s) given by c, theta = 2 pi / c.
    #[arg(long, group = "theta", value_delimiter = ',', allow_negative_numbers = true)]
    pub theta_c: Vec<f64>,
}

impl ThetaArgs {
    pub fn specs(&self) -> Vec<ThetaSpec> {
        self.theta_rad
            .iter()
            .map(|&t| ThetaSpec::Radians(t))
            .chain(self.theta_frac.iter().map(|&f| ThetaSpec::FractionOfPi(f)))
            .chain(self.theta_c.iter().map(|&c| ThetaSpec::CValue(c)))
            .collect()
    }
}

/// Where the initial colouring comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    Hemisphere,
    Random,
    File(PathBuf),
}

impl InitMode {
    pub fn label(&self) -> &'static str {
        match self {
            InitMode::Hemisphere => "hemisphere",
            InitMode::Random => "random",
            InitMode::File(_) => "file",
        }
    }
}

impl FromStr for InitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hemisphere" => Ok(InitMode::Hemisphere),
            "random" => Ok(InitMode::Random),
            _ => match s.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(InitMode::File(PathBuf::from(path))),
                _ => Err(format!("expected hemisphere, random or file:<path>, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Greedy,
    Sa,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Greedy => Algorithm::Greedy,
            AlgoArg::Sa => Algorithm::Anneal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulePreset {
    /// T0 = 0.4, alpha = 0.99999, 150 N steps.
    Default,
    /// T0 = 0.2, alpha = 0.999995, 150 N steps.
    Slow,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// hemisphere, random or file:<path>.
    #[arg(long, default_value = "random")]
    pub init: InitMode,
    #[arg(long, value_enum, default_value = "sa")]
    pub algo: AlgoArg,
    /// Annealing schedule preset; --t0/--alpha/--steps override its fields.
    #[arg(long, value_enum, default_value = "default")]
    pub schedule: SchedulePreset,
    #[arg(long)]
    pub t0: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Base seed; run r anneals with seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Base seed of random initial colourings (defaults to --seed); run r
    /// starts from init-seed + r.
    #[arg(long)]
    pub init_seed: Option<u64>,
    /// Independent runs per angle; the best one is reported.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Write a per-step annealing log (CSV) to this path.
    #[arg(long)]
    pub log_events: Option<PathBuf>,
    /// Directory for cached kernel indexes.
    #[arg(long)]
    pub cache_index: Option<PathBuf>,
    /// Output directory for colourings and results.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub grid: GridSource,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub grid: GridSource,
    #[command(flatten)]
    pub theta: ThetaArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Start every angle from the best colouring of the previous one.
    #[arg(long)]
    pub chain: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub grid: PathBuf,
    /// COLv1 file to check.
    #[arg(long)]
    pub colouring: PathBuf,
    /// Angle to evaluate at; defaults to the one stored in the colouring file.
    #[command(flatten)]
    pub theta: ThetaArgs,
    /// Per-point CSV (lon, lat, colour, P_i) for map rendering.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub cache_index: Option<PathBuf>,
}
