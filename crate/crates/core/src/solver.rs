//! Intrinsic sample means by Riemannian fixed-point (Karcher) iteration.
//!
//! The update direction is the mean of the logs, `g(p) = mean_j log_p(X_j)`,
//! which is minus one half of the Riemannian gradient of the sample Fréchet
//! function. Every accepted step decreases the Fréchet value; a step that
//! would increase it is halved until it does not.
//!
//! Near a smeary mean the Fréchet function is nearly flat (its Hessian tends
//! to zero with the sample size), and the unit fixed-point step then crawls.
//! With `adaptive_step` the step length is chosen by the Barzilai–Borwein
//! rule from the last two iterates instead, under the same descent safeguard.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::SmearyFamily;
use crate::sphere::{dot, exp_raw, norm, SpherePoint, CUT_LOCUS_EPS};

const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once the norm of the mean log falls below this (radians).
    pub step_tol: f64,
    pub max_iter: usize,
    /// Initial step multiplier, in `(0, 1]`.
    pub step_size: f64,
    /// Use Barzilai–Borwein step lengths.
    pub adaptive_step: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            step_tol: 1e-10,
            max_iter: 10_000,
            step_size: 1.0,
            adaptive_step: true,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.step_tol.is_nan() || self.step_tol <= 0.0 {
            return Err(Error::Domain {
                what: "step_tol",
                value: self.step_tol,
            });
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size <= 1.0) {
            return Err(Error::Domain {
                what: "step_size",
                value: self.step_size,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverResult {
    pub mean: SpherePoint,
    pub iterations: usize,
    /// Norm of the mean log at the returned point.
    pub final_step: f64,
    pub converged: bool,
    pub frechet_value: f64,
    /// The extrinsic mean vanished and the first point was used to start.
    pub init_fallback: bool,
    /// Logs skipped because a data point was antipodal to the iterate.
    pub skipped_antipodal: usize,
    pub halvings: usize,
    /// Fréchet value after every accepted iterate, starting with the initial one.
    pub history: Vec<f64>,
}

/// Weighted points stored in one flat buffer.
///
/// Repeated points (such as the atom of the smeary family) can be stored once
/// with their multiplicity as weight.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    ambient: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl PointCloud {
    /// Empty cloud on S^m.
    pub fn new(m: usize) -> Self {
        Self {
            ambient: m + 1,
            coords: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn from_points(points: &[SpherePoint]) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty)?;
        let mut cloud = Self::new(first.dim());
        for p in points {
            cloud.push(p, 1.0)?;
        }
        Ok(cloud)
    }

    /// `n` draws from the family, with all atom draws merged into one entry.
    pub fn sample<R: Rng + ?Sized>(fam: &SmearyFamily, n: usize, rng: &mut R) -> Self {
        let dim = fam.m() + 1;
        let mut cloud = Self::new(fam.m());
        cloud.coords.reserve(n * dim);
        let mut buf = vec![0.0; dim];
        let mut atoms = 0usize;
        for _ in 0..n {
            if fam.draw_into(&mut buf, rng) {
                cloud.coords.extend_from_slice(&buf);
                cloud.weights.push(1.0);
            } else {
                atoms += 1;
            }
        }
        if atoms > 0 {
            cloud.coords.extend_from_slice(fam.north_pole().coords());
            cloud.weights.push(atoms as f64);
        }
        cloud
    }

    pub fn push(&mut self, p: &SpherePoint, weight: f64) -> Result<()> {
        if p.coords().len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient - 1,
                found: p.dim(),
            });
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::Domain {
                what: "weight",
                value: weight,
            });
        }
        self.coords.extend_from_slice(p.coords());
        self.weights.push(weight);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.ambient - 1
    }

    /// Number of stored entries (not the total weight).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.ambient..(i + 1) * self.ambient]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.coords
            .chunks_exact(self.ambient)
            .zip(self.weights.iter().copied())
    }
}

/// Fréchet value, mean log and antipodal count at `p`.
struct Local {
    value: f64,
    direction: Vec<f64>,
    skipped: usize,
}

/// Neumaier's compensated sum; near the optimum the Fréchet decrease per step
/// is far below the rounding error of a naive sum over many points.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

fn local(cloud: &PointCloud, p: &[f64], total: f64) -> Local {
    let mut direction = vec![0.0; p.len()];
    let mut value = CompensatedSum::default();
    let mut skipped = 0;
    for (x, w) in cloud.iter() {
        let c = dot(p, x);
        let mut s2 = 0.0;
        for (xi, pi) in x.iter().zip(p) {
            let v = xi - c * pi;
            s2 += v * v;
        }
        let s = s2.sqrt();
        let theta = s.atan2(c);
        value.add(w * theta * theta);
        if c <= -1.0 + CUT_LOCUS_EPS {
            skipped += 1;
            continue;
        }
        if s > 0.0 {
            let f = w * theta / s;
            for ((d, xi), pi) in direction.iter_mut().zip(x).zip(p) {
                *d += f * (xi - c * pi);
            }
        }
    }
    for d in &mut direction {
        *d /= total;
    }
    Local {
        value: value.total() / total,
        direction,
        skipped,
    }
}

/// Karcher mean of a list of points, each with unit weight.
pub fn karcher_mean(points: &[SpherePoint], opts: &SolverOptions) -> Result<SolverResult> {
    let cloud = PointCloud::from_points(points)?;
    karcher_mean_cloud(&cloud, opts)
}

/// Karcher mean of a weighted point cloud.
pub fn karcher_mean_cloud(cloud: &PointCloud, opts: &SolverOptions) -> Result<SolverResult> {
    opts.validate()?;
    if cloud.is_empty() {
        return Err(Error::Empty);
    }
    let total = cloud.total_weight();
    let dim = cloud.ambient;

    let mut extrinsic = vec![0.0; dim];
    for (x, w) in cloud.iter() {
        for (e, xi) in extrinsic.iter_mut().zip(x) {
            *e += w * xi;
        }
    }
    let en = norm(&extrinsic);
    let init_fallback = en < 1e-12 * total;
    let mut p: Vec<f64> = if init_fallback {
        cloud.point(0).to_vec()
    } else {
        extrinsic.iter().map(|e| e / en).collect()
    };

    let mut here = local(cloud, &p, total);
    let mut skipped = here.skipped;
    let mut history = vec![here.value];
    let mut halvings = 0;
    let mut iterations = 0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // (p, g) before the last step

    while iterations < opts.max_iter {
        let gnorm = norm(&here.direction);
        if gnorm < opts.step_tol {
            break;
        }
        let mut tau = opts.step_size;
        if opts.adaptive_step {
            if let Some((pp, gp)) = &prev {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..dim {
                    let s = p[i] - pp[i];
                    let y = gp[i] - here.direction[i];
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 && ss > 0.0 {
                    tau = (ss / sy).clamp(opts.step_size * 1e-3, 1e8);
                }
            }
        }
        // never move further than a quarter circle in one step
        tau = tau.min(FRAC_PI_2 / gnorm);

        let slack = 4.0 * f64::EPSILON * here.value.abs();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let step: Vec<f64> = here.direction.iter().map(|d| tau * d).collect();
            let q = exp_raw(&p, &step);
            let there = local(cloud, &q, total);
            if there.value <= here.value + slack {
                accepted = Some((q, there));
                break;
            }
            tau *= 0.5;
            halvings += 1;
        }
        let Some((q, there)) = accepted else {
            // no descent possible at floating-point resolution
            break;
        };
        iterations += 1;
        skipped += there.skipped;
        history.push(there.value);
        let old = std::mem::replace(&mut here, there);
        prev = Some((std::mem::replace(&mut p, q), old.direction));
    }

    let final_step = norm(&here.direction);
    Ok(SolverResult {
        mean: SpherePoint::from_unit(p),
        iterations,
        final_step,
        converged: final_step < opts.step_tol,
        frechet_value: here.value,
        init_fallback,
        skipped_antipodal: skipped,
        halvings,
        history,
    })
}
