use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use isingprobe::sweep::SymmetryQuantity;
use isingprobe::{Grid, RingConfig, ThermalConfig, OPTIMAL_THETA};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "isingprobe", version, about = "Probe-qubit echo and QFI sweeps over a transverse-field Ising ring")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Loschmidt echo surface over a (lambda, t) grid
    Echo(SurfaceArgs),
    /// QFI surface over a (lambda, t) grid
    Qfi(SurfaceArgs),
    /// Refined QFI peaks near the critical field
    Peaks(PeaksArgs),
    /// Peak height against ring size at fixed N*delta, with a quadratic fit
    Scaling(ScalingArgs),
    /// Scaling-symmetry residual between rings n0 and alpha*n0
    Symmetry(SymmetryArgs),
    /// Compare closed forms against the block and exact-diagonalization oracles
    OracleCheck(OracleArgs),
}

/// `min:max:steps`, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts[..] else {
            return Err(format!("expected min:max:steps, got {s:?}"));
        };
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Range {
            min: num(min)?,
            max: num(max)?,
            steps: steps.trim().parse().map_err(|e| format!("{steps:?}: {e}"))?,
        })
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.steps)
    }
}

/// `lo:hi`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window(pub f64, pub f64);

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Window(num(lo)?, num(hi)?))
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RingArgs {
    /// Number of ring spins (even)
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// Probe coupling
    #[arg(long)]
    pub delta: Option<f64>,
    /// Coupling given as the product N*delta
    #[arg(long = "n-delta")]
    pub n_delta: Option<f64>,
}

impl RingArgs {
    pub fn resolve(&self) -> Result<RingConfig, CliError> {
        let n = self.n.ok_or_else(|| CliError::config("--N is required"))?;
        let cfg = match (self.delta, self.n_delta) {
            (Some(d), None) => RingConfig::new(n, d),
            (None, Some(nd)) => RingConfig::with_n_delta(n, nd),
            _ => return Err(CliError::config("give exactly one of --delta and --n-delta")),
        };
        Ok(cfg?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Temperature; when given the thermal echo is used (T = 0 is allowed)
    #[arg(long = "T")]
    pub temperature: Option<f64>,
    /// Probe polar angle
    #[arg(long, default_value_t = OPTIMAL_THETA)]
    pub theta: f64,
    /// Probe phase; recorded but does not change the QFI
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Output directory
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// key=value file with defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl CommonArgs {
    pub fn thermal(&self) -> Result<ThermalConfig, CliError> {
        Ok(match self.temperature {
            Some(t) => ThermalConfig::new(t)?,
            None => ThermalConfig::ground(),
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub ring: RingArgs,
    /// lambda axis as min:max:steps
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Range,
    /// t axis as min:max:steps
    #[arg(long, allow_hyphen_values = true)]
    pub t: Range,
    #[command(flatten)]
    pub common: CommonArgs,
}

impl SurfaceArgs {
    pub fn grid(&self) -> Result<Grid, CliError> {
        grid(self.lambda, self.t)
    }
}

pub fn grid(lambda: Range, t: Range) -> Result<Grid, CliError> {
    Ok(Grid::new((lambda.min, lambda.max, lambda.steps), (t.min, t.max, t.steps))?)
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PeaksArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Number of peaks to report
    #[arg(long, default_value_t = 5)]
    pub count: usize,
    /// lambda window lo:hi, default lambda_c +- 5 delta
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Fraction of the window maximum a peak must reach
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScalingArgs {
    /// Ring sizes, comma separated
    #[arg(long = "n", value_delimiter = ',', action = ArgAction::Set, required = true)]
    pub n_list: Vec<usize>,
    /// Product N*delta held fixed across ring sizes
    #[arg(long = "n-delta")]
    pub n_delta: Option<f64>,
    /// Peak label (1 = earliest in t)
    #[arg(long, default_value_t = 1)]
    pub peak: usize,
    /// lambda window half-width in units of delta
    #[arg(long, default_value_t = 5.0)]
    pub halfwidth: f64,
    #[arg(long = "lambda-steps", default_value_t = 200)]
    pub lambda_steps: usize,
    /// t runs over [0, t_per_spin * N]
    #[arg(long = "t-per-spin", default_value_t = 0.3)]
    pub t_per_spin: f64,
    #[arg(long = "t-steps", default_value_t = 300)]
    pub t_steps: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Qfi,
    Echo,
}

impl From<Quantity> for SymmetryQuantity {
    fn from(q: Quantity) -> Self {
        match q {
            Quantity::Qfi => SymmetryQuantity::Qfi,
            Quantity::Echo => SymmetryQuantity::Echo,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SymmetryArgs {
    /// Smaller ring size
    #[arg(long)]
    pub n0: usize,
    /// Scale factor; alpha * n0 must be an integer
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "n-delta")]
    pub n_delta: f64,
    /// Shifted axis lambda - lambda_c as min:max:steps, default +-5 delta0 with 150 steps
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<Range>,
    /// t axis of ring n0, default 0:0.3*n0:200
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<Range>,
    #[arg(long, value_enum, default_value_t = Quantity::Qfi)]
    pub quantity: Quantity,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Histogram range lo:hi
    #[arg(long, allow_hyphen_values = true, default_value = "-0.5:0.5")]
    pub range: Window,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    /// Fewer random samples
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
