use serde::{Deserialize, Serialize};

use super::SimulationRecord;
use crate::error::{Error, Result};

/// Least-squares fit of `ln V = intercept + slope · ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub slope: f64,
    /// Propagated from the per-cell standard errors of V (delta method).
    pub slope_stderr: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub window: (usize, usize),
    pub points: usize,
    /// `k` with `slope = -1 / (k + 1)`; only defined for negative slopes.
    pub implied_order: Option<f64>,
}

/// The top 1.5 decades of the sample sizes present.
pub fn default_window(records: &[SimulationRecord]) -> Option<(usize, usize)> {
    let hi = records.iter().map(|r| r.n).max()?;
    let lo = (hi as f64 / 10f64.powf(1.5)).floor() as usize;
    Some((lo.max(1), hi))
}

/// Fits the decay exponent of V over the records with `n` inside `window`
/// (inclusive). All records must share `m` and `β`.
pub fn estimate_rate(
    records: &[SimulationRecord],
    window: Option<(usize, usize)>,
) -> Result<RateEstimate> {
    let first = records.first().ok_or(Error::Empty)?;
    if records
        .iter()
        .any(|r| r.m != first.m || r.beta.to_bits() != first.beta.to_bits())
    {
        return Err(Error::Config(
            "rate estimation needs records of a single (m, beta)".into(),
        ));
    }
    let window = match window {
        Some(w) => w,
        None => default_window(records).expect("nonempty"),
    };
    if window.0 > window.1 {
        return Err(Error::Config(format!(
            "empty window {}:{}",
            window.0, window.1
        )));
    }
    let mut sel: Vec<&SimulationRecord> = records
        .iter()
        .filter(|r| r.n >= window.0 && r.n <= window.1)
        .collect();
    sel.sort_by_key(|r| r.n);
    if sel.len() < 3 {
        return Err(Error::Config(format!(
            "need at least 3 records in window {}:{}, found {}",
            window.0,
            window.1,
            sel.len()
        )));
    }
    if let Some(r) = sel.iter().find(|r| r.v.is_nan() || r.v <= 0.0) {
        return Err(Error::Degenerate(format!("V = {} at n = {}", r.v, r.n)));
    }

    let x: Vec<f64> = sel.iter().map(|r| (r.n as f64).ln()).collect();
    let y: Vec<f64> = sel.iter().map(|r| r.v.ln()).collect();
    let k = x.len() as f64;
    let xm = x.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|xi| (xi - xm) * (xi - xm)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Degenerate("all sample sizes equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - xm) * (yi - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual_rms = (x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    // Var(ln V_i) ≈ (se_i / V_i)², cells independent
    let slope_var: f64 = x
        .iter()
        .zip(&sel)
        .map(|(xi, r)| ((xi - xm) / sxx).powi(2) * (r.stderr_v / r.v).powi(2))
        .sum();
    Ok(RateEstimate {
        slope,
        slope_stderr: slope_var.sqrt(),
        intercept,
        residual_rms,
        window,
        points: sel.len(),
        implied_order: (slope < 0.0).then(|| -1.0 / slope - 1.0),
    })
}
