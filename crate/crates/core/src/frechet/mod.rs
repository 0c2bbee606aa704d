//! Population and sample Fréchet functions.
//!
//! `G(δ)` is the population Fréchet function evaluated at any point at
//! geodesic distance `δ` from the north pole (it only depends on `δ` by
//! rotational symmetry). Differences `G(δ) - G(0)` and the derivative `G'` are
//! evaluated through a one-dimensional series in place of a quadrature over the
//! hemisphere; see [`series`] for the numerics.

mod series;

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{ln_sphere_volume, SmearyFamily};
use crate::sphere::{
    chart_to_ambient, dot, exp_at_north, geodesic_distance, log_at, sinc, sinc_slope, ChartVector,
    SpherePoint, NORTH_AXIS,
};

use series::{delta_sq_minus_two_vers, x_minus_sin, HemisphereSeries};
pub use series::{SeriesEval, DEFAULT_TOL, MAX_TERMS};

/// Maclaurin coefficient of `u^{2j+1}` in `arcsin u`.
pub fn arcsin_coeff(j: usize) -> f64 {
    let mut a = 1.0;
    for i in 1..=j {
        let i = i as f64;
        a *= (2.0 * i - 1.0) * (2.0 * i - 1.0) / ((2.0 * i) * (2.0 * i + 1.0));
    }
    a
}

/// `∫ g(θ) h(θ)^k dθ = v_{m+k} / v_{k+1}`.
pub fn h_moment(m: usize, k: usize) -> f64 {
    (ln_sphere_volume(m + k) - ln_sphere_volume(k + 1)).exp()
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..PI).contains(&delta) {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
        });
    }
    Ok(())
}

/// `G(δ) - G(0)` at the default tolerance.
pub fn population_frechet(fam: &SmearyFamily, delta: f64) -> Result<f64> {
    population_frechet_eval(fam, delta, DEFAULT_TOL).map(|e| e.value)
}

/// `G(δ) - G(0)` with the number of series terms used.
pub fn population_frechet_eval(fam: &SmearyFamily, delta: f64, tol: f64) -> Result<SeriesEval> {
    check_delta(delta)?;
    let s = HemisphereSeries::new(fam.m(), tol)?;
    let (alpha, gamma) = (fam.alpha(), fam.gamma_m());
    let ag = alpha * gamma;
    if s.small_angle_form(delta) {
        let kappa2 = 1.0 - alpha * (1.0 + gamma);
        let tail = s.q_tail(delta)?;
        let value =
            delta * delta * kappa2 + ag * (delta_sq_minus_two_vers(delta) - 2.0 * tail.value);
        Ok(SeriesEval {
            value,
            terms: tail.terms,
        })
    } else {
        let q = s.q(delta)?;
        Ok(SeriesEval {
            value: (1.0 - alpha) * delta * delta - 2.0 * ag * q.value,
            terms: q.terms,
        })
    }
}

/// `G'(δ)` at the default tolerance.
pub fn population_frechet_grad(fam: &SmearyFamily, delta: f64) -> Result<f64> {
    population_frechet_grad_eval(fam, delta, DEFAULT_TOL).map(|e| e.value)
}

/// `G'(δ)` with the number of series terms used.
pub fn population_frechet_grad_eval(
    fam: &SmearyFamily,
    delta: f64,
    tol: f64,
) -> Result<SeriesEval> {
    check_delta(delta)?;
    let s = HemisphereSeries::new(fam.m(), tol)?;
    let (alpha, gamma) = (fam.alpha(), fam.gamma_m());
    let ag = alpha * gamma;
    if s.small_angle_form(delta) {
        let kappa2 = 1.0 - alpha * (1.0 + gamma);
        let tail = s.p_tail(delta)?;
        let value = 2.0 * delta * kappa2 + 2.0 * ag * (x_minus_sin(delta) - tail.value);
        Ok(SeriesEval {
            value,
            terms: tail.terms,
        })
    } else {
        let p = s.p(delta)?;
        Ok(SeriesEval {
            value: 2.0 * (1.0 - alpha) * delta - 2.0 * ag * p.value,
            terms: p.terms,
        })
    }
}

/// `G(0) = α E[d(μ, X)² | X in the lower half]`.
///
/// With `ψ` the angle below the equator, `d = π/2 + ψ` and `ψ` has density
/// proportional to `cos^{m-1} ψ`; the three moments `W, J, K` of `1, ψ, ψ²`
/// follow two-step recurrences in the exponent.
pub fn frechet_at_center(fam: &SmearyFamily) -> f64 {
    let n = fam.m() - 1;
    let (mut w, mut j, mut k) = if n % 2 == 0 {
        (PI / 2.0, PI * PI / 8.0, PI * PI * PI / 24.0)
    } else {
        (1.0, PI / 2.0 - 1.0, PI * PI / 4.0 - 2.0)
    };
    let mut e = n % 2;
    while e < n {
        e += 2;
        let ef = e as f64;
        let r = (ef - 1.0) / ef;
        w *= r;
        j = r * j - 1.0 / (ef * ef);
        k = r * k - 2.0 * w / (ef * ef);
    }
    fam.alpha() * (PI * PI / 4.0 + PI * j / w + k / w)
}

/// Taylor coefficient of `δ^order` in `G` at zero, for `order` 2 or 4.
pub fn taylor_coeff(fam: &SmearyFamily, order: u32) -> Result<f64> {
    let (alpha, gamma) = (fam.alpha(), fam.gamma_m());
    match order {
        2 => Ok(1.0 - alpha * (1.0 + gamma)),
        4 => {
            let m = fam.m() as f64;
            Ok(alpha * 2.0 * gamma * (m - 1.0) / (m + 2.0) / 24.0)
        }
        _ => Err(Error::Domain {
            what: "Taylor order",
            value: order as f64,
        }),
    }
}

/// Radius of the circle of minimizers for supercritical mass: the positive
/// root of `G'`, found by bisection on `(1e-8, π - 1e-8)`.
pub fn mean_set_radius(fam: &SmearyFamily) -> Result<f64> {
    let mut lo = 1e-8;
    let mut hi = PI - 1e-8;
    let g_lo = population_frechet_grad(fam, lo)?;
    let g_hi = population_frechet_grad(fam, hi)?;
    if fam.beta() <= 0.0 || !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::NoRoot);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = population_frechet_grad(fam, mid)?;
        if g == 0.0 {
            return Ok(mid);
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean squared geodesic distance from `p` to the points.
pub fn empirical_frechet(points: &[SpherePoint], p: &SpherePoint) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    let mut sum = 0.0;
    for x in points {
        let d = geodesic_distance(p, x)?;
        sum += d * d;
    }
    Ok(sum / points.len() as f64)
}

/// Gradient in chart coordinates of `z ↦ d(exp_μ(z), x)²`.
pub fn rho_gradient(x: &SpherePoint, z: &ChartVector) -> Result<ChartVector> {
    let m = z.dim();
    if x.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: x.dim(),
        });
    }
    let p = exp_at_north(z)?;
    // ambient gradient of d² at p
    let u: Vec<f64> = log_at(&p, x)?.into_iter().map(|v| -2.0 * v).collect();
    let zc = z.coords();
    let r = z.norm();
    let u_chart: Vec<f64> = (0..m).map(|j| u[chart_to_ambient(j)]).collect();
    let (s, h) = (sinc(r), sinc_slope(r));
    let uz = dot(&u_chart, zc);
    let u_mu = u[NORTH_AXIS];
    let g = (0..m)
        .map(|j| s * u_chart[j] - u_mu * s * zc[j] + h * uz * zc[j])
        .collect();
    Ok(ChartVector::new(g))
}

/// `G - G(0)` and `G'` tabulated on a grid of distances.
#[derive(Debug, Clone, Serialize)]
pub struct FrechetCurve {
    pub family: SmearyFamily,
    pub deltas: Vec<f64>,
    pub values: Vec<f64>,
    pub grads: Vec<f64>,
    pub truncation_terms: Vec<usize>,
    pub tol: f64,
}

impl FrechetCurve {
    pub fn tabulate(fam: SmearyFamily, deltas: Vec<f64>, tol: f64) -> Result<Self> {
        let rows: Vec<(f64, f64, usize)> = deltas
            .par_iter()
            .map(|&d| {
                let v = population_frechet_eval(&fam, d, tol)?;
                let g = population_frechet_grad_eval(&fam, d, tol)?;
                Ok((v.value, g.value, v.terms.max(g.terms)))
            })
            .collect::<Result<_>>()?;
        let mut curve = Self {
            family: fam,
            values: Vec::with_capacity(rows.len()),
            grads: Vec::with_capacity(rows.len()),
            truncation_terms: Vec::with_capacity(rows.len()),
            deltas,
            tol,
        };
        for (v, g, t) in rows {
            curve.values.push(v);
            curve.grads.push(g);
            curve.truncation_terms.push(t);
        }
        Ok(curve)
    }

    /// `steps + 1` equally spaced distances from 0 to `dmax`.
    pub fn uniform(fam: SmearyFamily, dmax: f64, steps: usize, tol: f64) -> Result<Self> {
        if !(dmax > 0.0 && dmax < PI) {
            return Err(Error::Domain {
                what: "dmax",
                value: dmax,
            });
        }
        if steps == 0 {
            return Err(Error::Config("steps must be at least 1".into()));
        }
        let deltas = (0..=steps)
            .map(|i| dmax * i as f64 / steps as f64)
            .collect();
        Self::tabulate(fam, deltas, tol)
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// CSV with header `delta,G_minus_G0,Gprime,terms_used`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta", "G_minus_G0", "Gprime", "terms_used"])?;
        for i in 0..self.len() {
            w.write_record(&[
                self.deltas[i].to_string(),
                self.values[i].to_string(),
                self.grads[i].to_string(),
                self.truncation_terms[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
