//! The two-component family on S^m: an atom of mass `1 - α` at the north pole
//! plus mass `α` spread uniformly over the lower half sphere.
//!
//! All Gamma-function ratios go through `lgamma` differences so the constants
//! stay finite for m in the thousands.

use rand::Rng;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::sphere::{fill_lower_half, SpherePoint, NORTH_AXIS};

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln vol(S^m)`.
pub fn ln_sphere_volume(m: usize) -> f64 {
    let h = (m as f64 + 1.0) / 2.0;
    LN_2 + h * PI.ln() - ln_gamma(h)
}

/// Volume of the unit m-sphere, `2 π^((m+1)/2) / Γ((m+1)/2)`.
pub fn sphere_volume(m: usize) -> f64 {
    ln_sphere_volume(m).exp()
}

/// `γ_m = v_{m+1} / (2 v_m) = (√π / 2) Γ((m+1)/2) / Γ((m+2)/2)`.
pub fn gamma_m(m: usize) -> f64 {
    let m = m as f64;
    0.5 * PI.sqrt() * (ln_gamma((m + 1.0) / 2.0) - ln_gamma((m + 2.0) / 2.0)).exp()
}

/// Critical hemisphere mass `1 / (1 + γ_m)` at which the quadratic term of the
/// population Fréchet function vanishes.
pub fn alpha_crit(m: usize) -> f64 {
    1.0 / (1.0 + gamma_m(m))
}

/// Fourth derivative of the Fréchet function at the pole for `α = α_crit`:
/// `c_m = (2 γ_m / (1 + γ_m)) (m - 1) / (m + 2)`.
pub fn c_m(m: usize) -> f64 {
    let g = gamma_m(m);
    let mf = m as f64;
    (2.0 * g / (1.0 + g)) * (mf - 1.0) / (mf + 2.0)
}

/// Parameters of the family, with the dimension constants cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmearyFamily {
    m: usize,
    alpha: f64,
    gamma_m: f64,
    alpha_crit: f64,
    c_m: f64,
}

impl SmearyFamily {
    /// Family on S^m with hemisphere mass `alpha`.
    pub fn new(m: usize, alpha: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain {
                what: "dimension m",
                value: m as f64,
            });
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain {
                what: "alpha",
                value: alpha,
            });
        }
        let gamma_m = gamma_m(m);
        Ok(Self {
            m,
            alpha,
            gamma_m,
            alpha_crit: 1.0 / (1.0 + gamma_m),
            c_m: c_m(m),
        })
    }

    /// Family parametrized by the offset from criticality, `α = α_crit + β`.
    pub fn from_beta(m: usize, beta: f64) -> Result<Self> {
        Self::new(m, alpha_crit(m) + beta)
    }

    /// The critical member, `α = α_crit`.
    pub fn critical(m: usize) -> Result<Self> {
        Self::new(m, alpha_crit(m))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma_m(&self) -> f64 {
        self.gamma_m
    }

    pub fn alpha_crit(&self) -> f64 {
        self.alpha_crit
    }

    pub fn c_m(&self) -> f64 {
        self.c_m
    }

    pub fn beta(&self) -> f64 {
        self.alpha - self.alpha_crit
    }

    pub fn north_pole(&self) -> SpherePoint {
        SpherePoint::north_pole(self.m)
    }

    /// Draws `n` independent points. Atom draws are bit-identical to the pole.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<SpherePoint> {
        let dim = self.m + 1;
        (0..n)
            .map(|_| {
                let mut coords = vec![0.0; dim];
                if self.draw_into(&mut coords, rng) {
                    SpherePoint::from_unit(coords)
                } else {
                    self.north_pole()
                }
            })
            .collect()
    }

    /// One draw. Writes a lower-half point into `out` and returns `true`, or
    /// returns `false` for the atom (leaving `out` untouched).
    ///
    /// Every sampler in the crate goes through here so that a given stream
    /// yields the same data regardless of the container it is collected into.
    pub(crate) fn draw_into<R: Rng + ?Sized>(&self, out: &mut [f64], rng: &mut R) -> bool {
        let u: f64 = rng.random();
        if u < self.alpha {
            fill_lower_half(out, rng);
            debug_assert!(out[NORTH_AXIS] <= 0.0);
            true
        } else {
            false
        }
    }
}
