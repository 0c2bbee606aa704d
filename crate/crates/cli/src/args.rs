use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smeary_core::SolverOptions;

#[derive(Debug, Parser)]
#[command(name = "smeary", version, about = "Smeary Fréchet means on spheres")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 20180214)]
    pub seed: u64,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "SMEARY_THREADS")]
    pub threads: Option<usize>,

    /// Output file; defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format. `rate` and `clt` default to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sphere volumes and critical constants.
    Constants(ConstantsArgs),
    /// Tabulate G(δ) - G(0) and G'(δ) of the population Fréchet function.
    Curve(CurveArgs),
    /// Intrinsic mean of points read from a CSV of unit vectors.
    Mean(MeanArgs),
    /// Monte Carlo grid of V over (β, n).
    Simulate(SimulateArgs),
    /// Log-log rate fit on simulation output.
    Rate(RateArgs),
    /// Cube CLT check at critical mass.
    Clt(CltArgs),
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    /// Dimensions m, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dim: Vec<usize>,
}

#[derive(Debug, Args)]
#[group(id = "mass", required = true, multiple = false, args = ["alpha", "beta"])]
pub struct MassArgs {
    /// Hemisphere mass α in (0, 1).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Offset β = α - α_crit.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub mass: MassArgs,
    /// Largest δ, in (0, π).
    #[arg(long, default_value_t = 3.0)]
    pub dmax: f64,
    /// Number of intervals; the grid has steps + 1 points.
    #[arg(long, default_value_t = 300)]
    pub steps: usize,
    /// Relative truncation tolerance of the series.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Stop once a step is shorter than this.
    #[arg(long, default_value_t = SolverOptions::default().step_tol)]
    pub step_tol: f64,
    #[arg(long, default_value_t = SolverOptions::default().max_iter)]
    pub max_iter: usize,
    /// Plain Karcher step size (no Barzilai-Borwein scaling).
    #[arg(long)]
    pub fixed_step: Option<f64>,
}

impl SolverArgs {
    pub fn options(&self) -> SolverOptions {
        let mut o = SolverOptions {
            step_tol: self.step_tol,
            max_iter: self.max_iter,
            ..SolverOptions::default()
        };
        if let Some(s) = self.fixed_step {
            o.step_size = s;
            o.adaptive_step = false;
        }
        o
    }
}

#[derive(Debug, Args)]
pub struct MeanArgs {
    /// CSV with one unit vector per row; a header row is optional. `-` reads stdin.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Include the objective value of every iteration (json only).
    #[arg(long)]
    pub history: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// β values, comma separated; defaults to the standard grid around criticality.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "alphas"
    )]
    pub betas: Option<Vec<f64>>,
    /// Hemisphere masses α instead of β, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 30)]
    pub nmin: usize,
    #[arg(long, default_value_t = 100_000)]
    pub nmax: usize,
    #[arg(long, default_value_t = 4)]
    pub per_decade: usize,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    /// Simulation CSV as written by `simulate`. `-` reads stdin.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Inclusive sample-size window `nlow:nhigh`; defaults to the top 1.5 decades.
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(usize, usize)>,
    /// Only fit records of this dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Only fit records of this β.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CltArgs {
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Also estimate the limiting covariance from this many draws (0 skips it).
    #[arg(long, default_value_t = 0)]
    pub sigma_draws: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected nlow:nhigh, got `{s}`"))?;
    let lo = a
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("nlow: {e}"))?;
    let hi = b
        .trim()
        .parse::<usize>()
        .map_err(|e| format!("nhigh: {e}"))?;
    if lo > hi {
        return Err(format!("nlow {lo} exceeds nhigh {hi}"));
    }
    Ok((lo, hi))
}
