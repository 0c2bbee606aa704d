//! Monte Carlo experiments: variance decay over grids of (β, n), rate fits,
//! the cube CLT check and chart invariance.
//!
//! Every replication draws from its own ChaCha stream, derived from the
//! seed and the indices of the replication alone, so results do not depend on
//! how the work is scheduled across threads.

mod clt;
mod io;
mod rate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SmearyFamily;
use crate::solver::{karcher_mean_cloud, PointCloud, SolverOptions, SolverResult};

pub use clt::{
    chart_invariance_check, clt_cube_check, is_full_rank, sigma_theoretical, ChartInvariance,
    CltSummary, Distortion, SigmaEstimate,
};
pub use io::{grid_manifest, read_records_csv, write_records_csv, SCHEMA_VERSION};
pub use rate::{default_window, estimate_rate, RateEstimate};

/// Default β grid around criticality.
pub const DEFAULT_BETAS: [f64; 8] = [-0.2, -0.1, -0.05, -0.02, 0.0, 0.02, 0.05, 0.1];

/// Stream domains, so that different experiments never share a stream.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Domain {
    Grid = 1,
    Clt = 2,
    Chart = 3,
    Sigma = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for replication `rep` of `cell` within an experiment.
pub(crate) fn replication_rng(seed: u64, domain: Domain, cell: u64, rep: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(seed ^ splitmix64(domain as u64)) ^ cell);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(rep);
    rng
}

/// Sample sizes from `nmin` to `nmax` (both included) on the grid
/// `10^(i / per_decade)`; grid points within half a step of an end are dropped.
pub fn log_spaced(nmin: usize, nmax: usize, per_decade: usize) -> Result<Vec<usize>> {
    if nmin == 0 || nmax < nmin || per_decade == 0 {
        return Err(Error::Config(format!(
            "invalid sample-size range {nmin}..{nmax} with {per_decade} per decade"
        )));
    }
    let pd = per_decade as f64;
    let (lo, hi) = ((nmin as f64).log10() * pd, (nmax as f64).log10() * pd);
    let mut out = vec![nmin];
    let first = (lo - 1e-9).ceil() as i64;
    let last = (hi + 1e-9).floor() as i64;
    for i in first..=last {
        let e = i as f64;
        if e - lo < 0.5 - 1e-9 && e > lo + 1e-9 || hi - e < 0.5 - 1e-9 && e < hi - 1e-9 {
            continue;
        }
        let n = 10f64.powf(e / pd).round() as usize;
        if n > *out.last().unwrap() && n <= nmax {
            out.push(n);
        }
    }
    if nmax > *out.last().unwrap() {
        out.push(nmax);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub m: usize,
    pub betas: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl GridConfig {
    /// Default grid: the standard β values, 30 to 10⁵ at 4 points per decade, 200 replications.
    pub fn desk_scale(m: usize, seed: u64) -> Self {
        Self {
            m,
            betas: DEFAULT_BETAS.to_vec(),
            sample_sizes: log_spaced(30, 100_000, 4).expect("static range"),
            reps: 200,
            seed,
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Domain {
                what: "dimension m",
                value: self.m as f64,
            });
        }
        if self.reps < 2 {
            return Err(Error::Config("reps must be at least 2".into()));
        }
        if self.betas.is_empty() || self.sample_sizes.is_empty() {
            return Err(Error::Config("empty β or sample-size grid".into()));
        }
        if self.sample_sizes[0] == 0 || self.sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "sample sizes must be positive and strictly increasing".into(),
            ));
        }
        for &b in &self.betas {
            SmearyFamily::from_beta(self.m, b)?;
        }
        self.solver.validate()
    }
}

/// Aggregate over the replications of one (β, n) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub m: usize,
    pub beta: f64,
    pub alpha: f64,
    pub n: usize,
    pub reps: usize,
    /// Mean squared distance of the sample means from the north pole.
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "stderr_V")]
    pub stderr_v: f64,
    pub mean_iterations: f64,
    pub nonconverged: usize,
    pub seed: u64,
}

impl SimulationRecord {
    /// More than a tenth of the replications failed to converge.
    pub fn flagged(&self) -> bool {
        self.nonconverged * 10 > self.reps
    }
}

/// Sample mean of one replication.
pub(crate) fn solve_replication(
    fam: &SmearyFamily,
    n: usize,
    rng: &mut ChaCha8Rng,
    opts: &SolverOptions,
) -> Result<SolverResult> {
    let cloud = PointCloud::sample(fam, n, rng);
    karcher_mean_cloud(&cloud, opts)
}

/// Squared distance from the north pole.
pub(crate) fn pole_distance_sq(p: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != crate::sphere::NORTH_AXIS)
        .map(|(_, x)| x * x)
        .sum::<f64>()
        .sqrt();
    let d = s.atan2(p[crate::sphere::NORTH_AXIS]);
    d * d
}

/// Mean and standard error.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs every (β, n) cell of the grid.
pub fn run_grid(cfg: &GridConfig) -> Result<Vec<SimulationRecord>> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = (0..cfg.betas.len())
        .flat_map(|b| (0..cfg.sample_sizes.len()).map(move |i| (b, i)))
        .collect();
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..cfg.reps as u64).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<(f64, usize, bool)> = tasks
        .par_iter()
        .map(|&(c, rep)| {
            let (bi, ni) = cells[c];
            let fam = SmearyFamily::from_beta(cfg.m, cfg.betas[bi])?;
            let cell = ((bi as u64) << 32) | ni as u64;
            let mut rng = replication_rng(cfg.seed, Domain::Grid, cell, rep);
            let r = solve_replication(&fam, cfg.sample_sizes[ni], &mut rng, &cfg.solver)?;
            Ok((pole_distance_sq(r.mean.coords()), r.iterations, r.converged))
        })
        .collect::<Result<_>>()?;

    let records = cells
        .iter()
        .zip(outcomes.chunks(cfg.reps))
        .map(|(&(bi, ni), chunk)| {
            let d2: Vec<f64> = chunk.iter().map(|o| o.0).collect();
            let (v, stderr_v) = mean_stderr(&d2);
            let fam = SmearyFamily::from_beta(cfg.m, cfg.betas[bi]).expect("validated");
            SimulationRecord {
                m: cfg.m,
                beta: cfg.betas[bi],
                alpha: fam.alpha(),
                n: cfg.sample_sizes[ni],
                reps: cfg.reps,
                v,
                stderr_v,
                mean_iterations: chunk.iter().map(|o| o.1 as f64).sum::<f64>() / cfg.reps as f64,
                nonconverged: chunk.iter().filter(|o| !o.2).count(),
                seed: cfg.seed,
            }
        })
        .collect();
    Ok(records)
}
