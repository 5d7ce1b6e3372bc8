//! Command-line interface.
//!
//! Every setting resolves from its flag, then the `--config` file, then a
//! built-in default. The seed additionally honors `CFPS_SEED` between the
//! flag and the file. Machine-readable results go to stdout as JSON lines,
//! diagnostics to stderr. Exit status is 0 on success, 1 on usage errors
//! and 2 on runtime failures.

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

use crate::cfps::CombineMode;
pub use config::{parse_config, Resolver, UsageError};

pub const SEED_ENV: &str = "CFPS_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "cfps",
    version,
    about = "Curvature-informed furthest point sampling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Downsample a cloud with FPS or CFPS.
    Sample(SampleArgs),
    /// Estimate per-point mean curvature.
    Curvature(CurvatureArgs),
    /// Train the exchange-ratio policy.
    Train(TrainArgs),
    /// Compare predicted clouds against a reference.
    Eval(EvalArgs),
    /// Generate an analytic test shape.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub method: Option<Method>,
    /// Core size K.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fixed exchange ratio g in [0, 1].
    #[arg(long, conflicts_with = "policy")]
    pub ratio: Option<f64>,
    /// Policy checkpoint; g is drawn from its Beta distribution.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    #[arg(long)]
    pub combine: Option<CombineMode>,
    /// Neighborhood size for normals and curvature.
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    /// First FPS point: an index, or `random` to draw it from the seed.
    #[arg(long)]
    pub seed_index: Option<SeedIndex>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Center and scale the input into the unit sphere first.
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Dump file, one `x y z h_raw h_norm` line per point.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory of .ply / .xyz clouds.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Weight of the curvature-retention term in the surrogate reward.
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub combine: Option<CombineMode>,
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub checkpoint_out: Option<PathBuf>,
    /// Also write the per-step JSON log to this file.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Replace the surrogate with `-(g - peak)²`, e.g. `peak=0.3`. Without
    /// a data directory each epoch is one step on a fixed summary.
    #[arg(long)]
    pub synthetic_reward: Option<SyntheticReward>,
    /// Apply the raw advantage instead of dividing by its running RMS.
    #[arg(long)]
    pub raw_advantage: bool,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted cloud; repeat for several.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// F1 distance threshold; defaults to 1% of the reference bounding-box
    /// diagonal.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub k_neighbors: Option<usize>,
    #[arg(long)]
    pub normalize: bool,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub shape: Option<Shape>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Cylinder height.
    #[arg(long)]
    pub height: Option<f64>,
    /// Torus major radius.
    #[arg(long)]
    pub major: Option<f64>,
    /// Torus minor radius.
    #[arg(long)]
    pub minor: Option<f64>,
    /// Plane side length.
    #[arg(long)]
    pub side: Option<f64>,
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Writes the analytic |H| of every point, one per line.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fps,
    Cfps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Sphere,
    Cylinder,
    Torus,
    Plane,
}

macro_rules! value_enum_from_str {
    ($($t:ty),*) => {$(
        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                <$t as ValueEnum>::from_str(s, false)
            }
        }
    )*};
}
value_enum_from_str!(Method, Shape);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedIndex {
    Fixed(usize),
    Random,
}

impl FromStr for SeedIndex {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "random" {
            return Ok(SeedIndex::Random);
        }
        s.parse()
            .map(SeedIndex::Fixed)
            .map_err(|_| format!("expected a point index or `random`, got {s:?}"))
    }
}

impl Serialize for SeedIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            SeedIndex::Fixed(i) => s.serialize_u64(*i as u64),
            SeedIndex::Random => s.serialize_str("random"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticReward {
    pub peak: f64,
}

impl FromStr for SyntheticReward {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let value = s
            .strip_prefix("peak=")
            .ok_or_else(|| format!("expected peak=<g>, got {s:?}"))?;
        let peak: f64 = value
            .parse()
            .map_err(|e| format!("bad peak {value:?}: {e}"))?;
        if !(0.0..=1.0).contains(&peak) {
            return Err(format!("peak must lie in [0, 1], got {peak}"));
        }
        Ok(Self { peak })
    }
}

impl fmt::Display for SyntheticReward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "peak={}", self.peak)
    }
}

impl Serialize for SyntheticReward {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Failure of a command: usage problems exit with 1, everything else with 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] UsageError),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn main() -> ExitCode {
    run(std::env::args_os())
}
