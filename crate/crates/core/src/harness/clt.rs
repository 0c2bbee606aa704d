use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    estimate_rate, mean_stderr, replication_rng, solve_replication, Domain, RateEstimate,
    SimulationRecord,
};
use crate::error::{Error, Result};
use crate::family::SmearyFamily;
use crate::solver::SolverOptions;
use crate::sphere::{log_at_north, NORTH_AXIS};

/// Summary of `w = √n · z³` (component-wise cube of the chart coordinates of
/// the sample mean) over replications at critical mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltSummary {
    pub m: usize,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Replications entering the statistics.
    pub used: usize,
    /// Replications whose mean sat on the cut locus of the pole.
    pub excluded: usize,
    pub nonconverged: usize,
    pub mean_iterations: f64,
    pub means: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub max_offdiag_corr: f64,
    pub diag_ratio: f64,
    pub skewness: Vec<f64>,
    /// Jackknife standard errors of the skewness; the cube is far from normal,
    /// so the normal-theory `sqrt(6 / n)` would be much too small.
    pub skewness_stderr: Vec<f64>,
    /// Covariance of `√n · |z|² z`, the isotropic counterpart of the cube.
    pub radial_covariance: Vec<Vec<f64>>,
}

#[allow(clippy::needless_range_loop)]
fn covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n)
        .collect();
    let mut c = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..=i {
                c[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            c[i][j] /= n - 1.0;
            c[j][i] = c[i][j];
        }
    }
    c
}

/// Sample skewness `m3 / m2^1.5` and its delete-one jackknife standard error.
fn skewness_jackknife(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    // power sums about the full-sample mean keep the leave-one-out updates stable
    let d: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let s1: f64 = d.iter().sum();
    let s2: f64 = d.iter().map(|v| v * v).sum();
    let s3: f64 = d.iter().map(|v| v * v * v).sum();
    let skew = |k: f64, a: f64, b: f64, c: f64| {
        let mu = a / k;
        let m2 = b / k - mu * mu;
        let m3 = c / k - 3.0 * mu * b / k + 2.0 * mu * mu * mu;
        m3 / m2.powf(1.5)
    };
    let full = skew(n, s1, s2, s3);
    let loo: Vec<f64> = d
        .iter()
        .map(|v| skew(n - 1.0, s1 - v, s2 - v * v, s3 - v * v * v))
        .collect();
    let avg = loo.iter().sum::<f64>() / n;
    let var = (n - 1.0) / n * loo.iter().map(|g| (g - avg).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

fn max_offdiag_corr(c: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..c.len() {
        for j in 0..i {
            worst = worst.max((c[i][j] / (c[i][i] * c[j][j]).sqrt()).abs());
        }
    }
    worst
}

fn diag_ratio(c: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = (0..c.len()).map(|i| c[i][i]).collect();
    d.iter().cloned().fold(f64::MIN, f64::max) / d.iter().cloned().fold(f64::MAX, f64::min)
}

/// Runs `reps` replications of size `n` at `α = α_crit` and summarizes the
/// rescaled component-wise cubes.
pub fn clt_cube_check(
    m: usize,
    n: usize,
    reps: usize,
    seed: u64,
    solver: &SolverOptions,
) -> Result<CltSummary> {
    if reps < 3 {
        return Err(Error::Config("reps must be at least 3".into()));
    }
    if n == 0 {
        return Err(Error::Config("n must be positive".into()));
    }
    solver.validate()?;
    let fam = SmearyFamily::critical(m)?;
    let outcomes: Vec<(Option<Vec<f64>>, usize, bool)> = (0..reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = replication_rng(seed, Domain::Clt, n as u64, rep);
            let r = solve_replication(&fam, n, &mut rng, solver)?;
            let z = match log_at_north(&r.mean) {
                Ok(z) => Some(z.into_coords()),
                Err(Error::CutLocus) => None,
                Err(e) => return Err(e),
            };
            Ok((z, r.iterations, r.converged))
        })
        .collect::<Result<_>>()?;

    let root_n = (n as f64).sqrt();
    let zs: Vec<&Vec<f64>> = outcomes.iter().filter_map(|o| o.0.as_ref()).collect();
    let used = zs.len();
    if used < 3 {
        return Err(Error::Degenerate("fewer than 3 usable replications".into()));
    }
    let cubes: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| z.iter().map(|x| root_n * x * x * x).collect())
        .collect();
    let radial: Vec<Vec<f64>> = zs
        .iter()
        .map(|z| {
            let r2: f64 = z.iter().map(|x| x * x).sum();
            z.iter().map(|x| root_n * r2 * x).collect()
        })
        .collect();

    let mut means = Vec::with_capacity(m);
    let mut mean_se = Vec::with_capacity(m);
    let mut skewness = Vec::with_capacity(m);
    let mut skew_se = Vec::with_capacity(m);
    for j in 0..m {
        let col: Vec<f64> = cubes.iter().map(|w| w[j]).collect();
        let (mu, se) = mean_stderr(&col);
        means.push(mu);
        mean_se.push(se);
        let (g, se) = skewness_jackknife(&col);
        skewness.push(g);
        skew_se.push(se);
    }
    let cov = covariance(&cubes);
    Ok(CltSummary {
        m,
        n,
        reps,
        seed,
        used,
        excluded: reps - used,
        nonconverged: outcomes.iter().filter(|o| !o.2).count(),
        mean_iterations: outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / reps as f64,
        means,
        mean_stderr: mean_se,
        max_offdiag_corr: max_offdiag_corr(&cov),
        diag_ratio: diag_ratio(&cov),
        covariance: cov,
        skewness,
        skewness_stderr: skew_se,
        radial_covariance: covariance(&radial),
    })
}

/// Monte Carlo estimate of `(36 / c_m²) Cov[-2 log_μ(X)]` at critical mass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEstimate {
    pub m: usize,
    pub draws: usize,
    pub scale: f64,
    pub matrix: Vec<Vec<f64>>,
    /// Mean of the gradient at the pole and its standard error.
    pub mean_gradient: Vec<f64>,
    pub mean_gradient_stderr: Vec<f64>,
    pub max_offdiag_ratio: f64,
    pub diag_ratio: f64,
    pub full_rank: bool,
}

const SIGMA_CHUNK: usize = 1 << 16;

pub fn sigma_theoretical(m: usize, mc_draws: usize, seed: u64) -> Result<SigmaEstimate> {
    if mc_draws < 2 {
        return Err(Error::Config("need at least 2 draws".into()));
    }
    let fam = SmearyFamily::critical(m)?;
    let chunks = mc_draws.div_ceil(SIGMA_CHUNK);
    // per chunk: Σ g and Σ g gᵀ
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = SIGMA_CHUNK.min(mc_draws - c * SIGMA_CHUNK);
            let mut rng = replication_rng(seed, Domain::Sigma, 0, c as u64);
            let mut buf = vec![0.0; m + 1];
            let mut s1 = vec![0.0; m];
            let mut s2 = vec![0.0; m * m];
            let mut g = vec![0.0; m];
            for _ in 0..count {
                if !fam.draw_into(&mut buf, &mut rng) {
                    continue;
                }
                let x = crate::sphere::SpherePoint::new(buf.clone())?;
                let z = log_at_north(&x)?;
                for (gi, zi) in g.iter_mut().zip(z.coords()) {
                    *gi = -2.0 * zi;
                }
                for i in 0..m {
                    s1[i] += g[i];
                    for j in 0..m {
                        s2[i * m + j] += g[i] * g[j];
                    }
                }
            }
            Ok((s1, s2))
        })
        .collect::<Result<_>>()?;
    let mut s1 = vec![0.0; m];
    let mut s2 = vec![0.0; m * m];
    for (a, b) in &partial {
        s1.iter_mut().zip(a).for_each(|(x, y)| *x += y);
        s2.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
    let n = mc_draws as f64;
    let mean: Vec<f64> = s1.iter().map(|s| s / n).collect();
    let scale = 36.0 / (fam.c_m() * fam.c_m());
    let mut cov = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            cov[i][j] = (s2[i * m + j] - n * mean[i] * mean[j]) / (n - 1.0);
        }
    }
    let mean_se = (0..m).map(|i| (cov[i][i] / n).sqrt()).collect();
    let matrix: Vec<Vec<f64>> = cov
        .iter()
        .map(|row| row.iter().map(|v| v * scale).collect())
        .collect();
    let max_diag = (0..m).map(|i| matrix[i][i]).fold(0.0, f64::max);
    let off = matrix
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |(j, _)| *j != i))
        .fold(0.0, |acc: f64, (_, v)| acc.max(v.abs() / max_diag));
    Ok(SigmaEstimate {
        m,
        draws: mc_draws,
        scale,
        full_rank: is_full_rank(&matrix),
        diag_ratio: diag_ratio(&matrix),
        max_offdiag_ratio: off,
        mean_gradient: mean,
        mean_gradient_stderr: mean_se,
        matrix,
    })
}

/// Cholesky test for positive definiteness, pivots relative to the largest diagonal.
pub fn is_full_rank(matrix: &[Vec<f64>]) -> bool {
    let d = matrix.len();
    let scale = (0..d).map(|i| matrix[i][i].abs()).fold(0.0, f64::max);
    if scale.is_nan() || scale <= 0.0 {
        return false;
    }
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let pivot = matrix[i][i] - s;
                if pivot.is_nan() || pivot <= 1e-10 * scale {
                    return false;
                }
                l[i][i] = pivot.sqrt();
            } else {
                l[i][j] = (matrix[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

/// Smooth chart changes fixing the origin, for the invariance check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distortion {
    Identity,
    /// Fixed rotation in the first two chart coordinates.
    Rotation,
    /// Component-wise `x + x³`, followed by the rotation.
    Cubic,
}

const ROTATION_ANGLE: f64 = 0.7;

impl Distortion {
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let mut y = z.to_vec();
        if *self == Distortion::Identity {
            return y;
        }
        if *self == Distortion::Cubic {
            y.iter_mut().for_each(|v| *v += *v * *v * *v);
        }
        if y.len() >= 2 {
            let (s, c) = ROTATION_ANGLE.sin_cos();
            let (a, b) = (y[0], y[1]);
            y[0] = c * a - s * b;
            y[1] = s * a + c * b;
        }
        y
    }
}

/// Decay of mean `|z|²` and mean `|Φ(z)|²` over a grid of sample sizes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartInvariance {
    pub distortion: Distortion,
    pub sample_sizes: Vec<usize>,
    pub original: Vec<SimulationRecord>,
    pub distorted: Vec<SimulationRecord>,
    pub original_rate: RateEstimate,
    pub distorted_rate: RateEstimate,
}

impl ChartInvariance {
    pub fn slope_difference(&self) -> f64 {
        (self.original_rate.slope - self.distorted_rate.slope).abs()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn chart_invariance_check(
    m: usize,
    beta: f64,
    sample_sizes: &[usize],
    reps: usize,
    seed: u64,
    distortion: Distortion,
    solver: &SolverOptions,
) -> Result<ChartInvariance> {
    if reps < 2 {
        return Err(Error::Config("reps must be at least 2".into()));
    }
    if sample_sizes.len() < 3 || sample_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "need at least 3 strictly increasing sample sizes".into(),
        ));
    }
    solver.validate()?;
    let fam = SmearyFamily::from_beta(m, beta)?;
    let tasks: Vec<(usize, u64)> = (0..sample_sizes.len())
        .flat_map(|i| (0..reps as u64).map(move |r| (i, r)))
        .collect();
    let pairs: Vec<(f64, f64, usize, bool)> = tasks
        .par_iter()
        .map(|&(i, rep)| {
            let mut rng = replication_rng(seed, Domain::Chart, i as u64, rep);
            let r = solve_replication(&fam, sample_sizes[i], &mut rng, solver)?;
            let (a, b) = match log_at_north(&r.mean) {
                Ok(z) => {
                    let y = distortion.apply(z.coords());
                    (
                        z.coords().iter().map(|v| v * v).sum(),
                        y.iter().map(|v| v * v).sum(),
                    )
                }
                // the cut locus is at distance π from the pole in any chart
                Err(Error::CutLocus) => {
                    debug_assert!(r.mean.coords()[NORTH_AXIS] < 0.0);
                    let pi2 = std::f64::consts::PI.powi(2);
                    (pi2, pi2)
                }
                Err(e) => return Err(e),
            };
            Ok((a, b, r.iterations, r.converged))
        })
        .collect::<Result<_>>()?;

    let record =
        |i: usize, chunk: &[(f64, f64, usize, bool)], pick: fn(&(f64, f64, usize, bool)) -> f64| {
            let vals: Vec<f64> = chunk.iter().map(pick).collect();
            let (v, se) = mean_stderr(&vals);
            SimulationRecord {
                m,
                beta,
                alpha: fam.alpha(),
                n: sample_sizes[i],
                reps,
                v,
                stderr_v: se,
                mean_iterations: chunk.iter().map(|o| o.2 as f64).sum::<f64>() / reps as f64,
                nonconverged: chunk.iter().filter(|o| !o.3).count(),
                seed,
            }
        };
    let mut original = Vec::new();
    let mut distorted = Vec::new();
    for (i, chunk) in pairs.chunks(reps).enumerate() {
        original.push(record(i, chunk, |o| o.0));
        distorted.push(record(i, chunk, |o| o.1));
    }
    let window = Some((sample_sizes[0], *sample_sizes.last().unwrap()));
    Ok(ChartInvariance {
        distortion,
        sample_sizes: sample_sizes.to_vec(),
        original_rate: estimate_rate(&original, window)?,
        distorted_rate: estimate_rate(&distorted, window)?,
        original,
        distorted,
    })
}
