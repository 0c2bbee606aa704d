//! Exact geometry of the unit sphere S^m embedded in R^(m+1).
//!
//! The distinguished point is the north pole `μ = e_2`, i.e. ambient index 1
//! (zero based). The exponential chart at `μ` drops that coordinate: chart
//! coordinate 0 is ambient 0, chart coordinate `j >= 1` is ambient `j + 1`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

/// Ambient index of the north pole axis.
pub const NORTH_AXIS: usize = 1;

/// Inner products at or below `-1 + CUT_LOCUS_EPS` are treated as antipodal.
pub const CUT_LOCUS_EPS: f64 = 1e-14;

/// Tolerance on `<v, p>` accepted by [`exp_at`].
pub const TANGENT_TOL: f64 = 1e-10;

/// A unit vector in R^(m+1).
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Builds a point from ambient coordinates, renormalizing to unit length.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Contract(format!(
                "a sphere point needs at least 2 ambient coordinates, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Contract("non-finite coordinate".into()));
        }
        let norm = norm(&coords);
        if norm == 0.0 {
            return Err(Error::Contract("zero vector cannot be normalized".into()));
        }
        let coords = coords.into_iter().map(|c| c / norm).collect();
        Ok(Self { coords })
    }

    /// Wraps coordinates that are already unit length. Callers guarantee the norm.
    pub(crate) fn from_unit(coords: Vec<f64>) -> Self {
        debug_assert!((norm(&coords) - 1.0).abs() < 1e-9);
        Self { coords }
    }

    /// The north pole `μ = (0, 1, 0, ..., 0)` of S^m.
    pub fn north_pole(m: usize) -> Self {
        Self::axis(m, NORTH_AXIS)
    }

    /// The standard basis vector with a one at ambient index `k` (zero based).
    pub fn axis(m: usize, k: usize) -> Self {
        assert!(k <= m, "axis index {k} out of range for S^{m}");
        let mut coords = vec![0.0; m + 1];
        coords[k] = 1.0;
        Self { coords }
    }

    /// Intrinsic dimension m.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Bitwise comparison against the north pole of the same sphere.
    pub fn is_north_pole(&self) -> bool {
        self.coords
            .iter()
            .enumerate()
            .all(|(i, &c)| if i == NORTH_AXIS { c == 1.0 } else { c == 0.0 })
    }
}

/// Coordinates in the exponential chart centred at the north pole.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartVector {
    coords: Vec<f64>,
}

impl ChartVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(m: usize) -> Self {
        Self {
            coords: vec![0.0; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Euclidean norm, equal to the geodesic distance from the north pole.
    pub fn norm(&self) -> f64 {
        norm(&self.coords)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sin(t) / t`, evaluated by its series near zero.
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// `(t cos t - sin t) / t^3`, the radial derivative of `sinc` divided by `t`.
pub(crate) fn sinc_slope(t: f64) -> f64 {
    if t.abs() < 1e-2 {
        let t2 = t * t;
        -1.0 / 3.0 + t2 / 30.0 - t2 * t2 / 840.0 + t2 * t2 * t2 / 45360.0
    } else {
        (t * t.cos() - t.sin()) / (t * t * t)
    }
}

/// Maps chart index to ambient index.
#[inline]
pub(crate) fn chart_to_ambient(j: usize) -> usize {
    if j == 0 {
        0
    } else {
        j + 1
    }
}

fn check_same_dim(p: &SpherePoint, q: &SpherePoint) -> Result<()> {
    if p.coords.len() != q.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    Ok(())
}

/// Splits `q` into its component along `p` and the orthogonal residual.
/// Returns `(cos, residual, |residual|)`.
fn decompose(p: &[f64], q: &[f64]) -> (f64, Vec<f64>, f64) {
    let c = dot(p, q);
    let v: Vec<f64> = q.iter().zip(p).map(|(qi, pi)| qi - c * pi).collect();
    let s = norm(&v);
    (c, v, s)
}

/// Great-circle distance in `[0, π]`.
///
/// The angle is recovered with `atan2(|q - <p,q>p|, <p,q>)`, which equals
/// `arccos <p,q>` but keeps full relative accuracy for nearby and nearly
/// antipodal points. The result is never NaN.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> Result<f64> {
    check_same_dim(p, q)?;
    let (c, _, s) = decompose(&p.coords, &q.coords);
    Ok(s.atan2(c.clamp(-1.0, 1.0)))
}

/// Inverse exponential map at the north pole.
pub fn log_at_north(p: &SpherePoint) -> Result<ChartVector> {
    let m = p.dim();
    let c = p.coords[NORTH_AXIS];
    if c <= -1.0 + CUT_LOCUS_EPS {
        return Err(Error::CutLocus);
    }
    let mut x = Vec::with_capacity(m);
    for j in 0..m {
        x.push(p.coords[chart_to_ambient(j)]);
    }
    let s = norm(&x);
    if s == 0.0 {
        return Ok(ChartVector::zeros(m));
    }
    let theta = s.atan2(c.clamp(-1.0, 1.0));
    let scale = theta / s;
    x.iter_mut().for_each(|xi| *xi *= scale);
    Ok(ChartVector::new(x))
}

/// Exponential map at the north pole, defined for `|x| < π`.
pub fn exp_at_north(x: &ChartVector) -> Result<SpherePoint> {
    let r = x.norm();
    if r.is_nan() || r >= std::f64::consts::PI {
        return Err(Error::Domain {
            what: "chart radius",
            value: r,
        });
    }
    let m = x.dim();
    let sc = sinc(r);
    let mut coords = vec![0.0; m + 1];
    coords[NORTH_AXIS] = r.cos();
    for (j, xj) in x.coords.iter().enumerate() {
        coords[chart_to_ambient(j)] = xj * sc;
    }
    let n = norm(&coords);
    coords.iter_mut().for_each(|c| *c /= n);
    Ok(SpherePoint::from_unit(coords))
}

/// Inverse exponential map at an arbitrary base point, as an ambient tangent vector.
pub fn log_at(p: &SpherePoint, q: &SpherePoint) -> Result<Vec<f64>> {
    check_same_dim(p, q)?;
    let (c, mut v, s) = decompose(&p.coords, &q.coords);
    if c <= -1.0 + CUT_LOCUS_EPS {
        return Err(Error::CutLocus);
    }
    if s == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let theta = s.atan2(c.clamp(-1.0, 1.0));
    let scale = theta / s;
    v.iter_mut().for_each(|vi| *vi *= scale);
    Ok(v)
}

/// Exponential map at `p` applied to a tangent vector `v` (`<v, p> = 0`).
pub fn exp_at(p: &SpherePoint, v: &[f64]) -> Result<SpherePoint> {
    if v.len() != p.coords.len() {
        return Err(Error::DimensionMismatch {
            expected: p.coords.len(),
            found: v.len(),
        });
    }
    let inner = dot(&p.coords, v);
    if inner.abs() > TANGENT_TOL {
        return Err(Error::Contract(format!(
            "vector is not tangent: <v, p> = {inner:e}"
        )));
    }
    Ok(SpherePoint::from_unit(exp_raw(&p.coords, v)))
}

/// `cos|v| p + sinc|v| v`, renormalized. No tangency check.
pub(crate) fn exp_raw(p: &[f64], v: &[f64]) -> Vec<f64> {
    let r = norm(v);
    let (c, sc) = (r.cos(), sinc(r));
    let mut out: Vec<f64> = p.iter().zip(v).map(|(pi, vi)| c * pi + sc * vi).collect();
    let n = norm(&out);
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Draws one point uniformly from the lower half sphere `{q : q_2 <= 0}` of S^m.
pub fn sample_lower_half<R: Rng + ?Sized>(m: usize, rng: &mut R) -> SpherePoint {
    SpherePoint::from_unit(lower_half_coords(m, rng))
}

pub(crate) fn lower_half_coords<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let mut g = vec![0.0; m + 1];
    fill_lower_half(&mut g, rng);
    g
}

/// Writes a uniform lower-half-sphere draw into `out` (length m + 1).
pub(crate) fn fill_lower_half<R: Rng + ?Sized>(out: &mut [f64], rng: &mut R) {
    loop {
        for gi in out.iter_mut() {
            *gi = rng.sample(StandardNormal);
        }
        let n = norm(out);
        if n > 0.0 {
            out.iter_mut().for_each(|gi| *gi /= n);
            out[NORTH_AXIS] = -out[NORTH_AXIS].abs();
            return;
        }
    }
}
