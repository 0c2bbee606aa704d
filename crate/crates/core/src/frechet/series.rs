//! Series evaluation of the hemisphere part of the Fréchet function.
//!
//! With `c = (m + 2) / 2` and `b_0 = 1`, `b_{j+1} = b_j (j + 1/2)^2 / ((j + 1)(j + c))`
//! (the product of the arcsin Maclaurin coefficient and the normalized
//! moment `∫ g h^{2j+1}`), the two building blocks are
//!
//! ```text
//! p(t) = Σ_j b_j t^{2j+1}              = t · 2F1(1/2, 1/2; c; t²)
//! q(δ) = Σ_j b_j ∫_0^δ sin^{2j+1} φ dφ = ∫_0^δ p(sin φ) dφ
//! ```
//!
//! The power series converges geometrically only while `sin²δ` stays away from
//! one. For `sin²δ > 1/2` and moderate `m` the hypergeometric function is
//! continued around `z = 1` instead (both the regular and the logarithmic
//! case), which again converges with ratio at most `1/2`, and `q` is assembled
//! from its value at `π/2` plus a term-by-term integrated tail.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2, PI};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_TERMS: usize = 10_000;

/// Above this dimension the plain power series converges fast even at `t = 1`.
const CONNECTION_MAX_DIM: usize = 40;

/// A series value with the number of terms it took.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    pub terms: usize,
}

fn ln_gamma_signed(x: f64) -> (f64, f64) {
    let (v, s) = libm::lgamma_r(x);
    (v, if s < 0 { -1.0 } else { 1.0 })
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `x - sin x` without cancellation for small `x`.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return x - x.sin();
    }
    let x2 = x * x;
    let mut term = x * x2 / 6.0;
    let mut sum: f64 = 0.0;
    let mut k = 1.0;
    while term.abs() > 1e-18 * sum.abs() || sum == 0.0 {
        sum += term;
        term *= -x2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
        k += 1.0;
        if term == 0.0 {
            break;
        }
    }
    sum
}

/// `δ² - 2(1 - cos δ)` without cancellation.
pub(crate) fn delta_sq_minus_two_vers(delta: f64) -> f64 {
    let half = 0.5 * delta;
    2.0 * x_minus_sin(half) * (delta + 2.0 * half.sin())
}

/// Evaluator for one dimension.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HemisphereSeries {
    m: usize,
    c: f64,
    tol: f64,
}

impl HemisphereSeries {
    pub fn new(m: usize, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::Domain {
                what: "truncation tolerance",
                value: tol,
            });
        }
        Ok(Self {
            m,
            c: (m as f64 + 2.0) / 2.0,
            tol,
        })
    }

    fn uses_power_series(&self, delta: f64) -> bool {
        self.m > CONNECTION_MAX_DIM || delta <= FRAC_PI_4 || delta >= 3.0 * FRAC_PI_4
    }

    #[inline]
    fn ratio(&self, j: usize) -> f64 {
        let jf = j as f64;
        (jf + 0.5) * (jf + 0.5) / ((jf + 1.0) * (jf + self.c))
    }

    /// `Σ_{j ≥ first} b_j t^{2j+1}`, truncated against the `j = 0` term.
    fn p_power(&self, t: f64, first: usize) -> Result<SeriesEval> {
        let t2 = t * t;
        let lead = t.abs();
        let mut b = 1.0;
        let mut pow = t;
        let mut sum = 0.0;
        for j in 0..MAX_TERMS {
            let term = b * pow;
            if j >= first {
                sum += term;
            }
            if term.abs() <= self.tol * lead && j >= first {
                return Ok(SeriesEval {
                    value: sum,
                    terms: j + 1,
                });
            }
            b *= self.ratio(j);
            pow *= t2;
        }
        Err(Error::Truncation { terms: MAX_TERMS })
    }

    /// `Σ_{j ≥ first} b_j I_{2j+1}(δ)`, with `I_k(δ) = ∫_0^δ sin^k`.
    fn q_power(&self, delta: f64, first: usize) -> Result<SeriesEval> {
        let (s, c) = delta.sin_cos();
        let s2 = s * s;
        let half = (0.5 * delta).sin();
        let mut integral = 2.0 * half * half; // I_1
        let lead = integral.abs();
        let mut sin_pow = s2; // sin^{k-1} for k = 3
        let mut b = 1.0;
        let mut sum = 0.0;
        for j in 0..MAX_TERMS {
            let term = b * integral;
            if j >= first {
                sum += term;
            }
            if term.abs() <= self.tol * lead && j >= first {
                return Ok(SeriesEval {
                    value: sum,
                    terms: j + 1,
                });
            }
            b *= self.ratio(j);
            let k = (2 * j + 3) as f64;
            integral = (-c * sin_pow + (k - 1.0) * integral) / k;
            sin_pow *= s2;
        }
        Err(Error::Truncation { terms: MAX_TERMS })
    }

    /// `2F1(1/2, 1/2; c; 1 - w)` for `0 <= w <= 1/2`.
    fn hyp_near_one(&self, w: f64) -> Result<SeriesEval> {
        self.continued(w, Integrand::Value)
    }

    /// `∫_0^u 2F1(1/2, 1/2; c; 1 - v²) dv` for `0 <= u <= 1/√2`.
    fn hyp_near_one_integral(&self, u: f64) -> Result<SeriesEval> {
        if u == 0.0 {
            return Ok(SeriesEval {
                value: 0.0,
                terms: 0,
            });
        }
        self.continued(u, Integrand::Integral)
    }

    fn continued(&self, x: f64, kind: Integrand) -> Result<SeriesEval> {
        if self.m % 2 == 1 {
            self.continued_odd(x, kind)
        } else {
            self.continued_even(x, kind)
        }
    }

    /// Connection formula with non-integer `c - a - b = m/2`:
    /// `F = A1 F(1/2,1/2;1-s;w) + A2 w^s F(c-1/2,c-1/2;s+1;w)`.
    fn continued_odd(&self, x: f64, kind: Integrand) -> Result<SeriesEval> {
        let s = self.m as f64 / 2.0;
        let c = self.c;
        let ln_g_c = ln_gamma(c);
        let ln_g_ca = ln_gamma(c - 0.5);
        let a1 = (ln_g_c + ln_gamma(s) - 2.0 * ln_g_ca).exp();
        let (ln_g_neg_s, sign) = ln_gamma_signed(-s);
        let a2 = sign * (ln_g_c + ln_g_neg_s - PI.ln()).exp();

        // w = x for the value, w = u² with integrated monomials otherwise
        let (w, ln_x) = match kind {
            Integrand::Value => (x, 0.0),
            Integrand::Integral => (x * x, x.ln()),
        };
        let min_terms = s.ceil() as usize + 2;

        let mut first = Sum::new(self.tol);
        let mut coef = 1.0;
        let mut pow = 1.0;
        for j in 0..MAX_TERMS {
            let jf = j as f64;
            let term = match kind {
                Integrand::Value => a1 * coef * pow,
                Integrand::Integral => a1 * coef * pow * x / (2.0 * jf + 1.0),
            };
            if first.push(term, j >= min_terms) {
                break;
            }
            coef *= (0.5 + jf) * (0.5 + jf) / ((1.0 - s + jf) * (jf + 1.0));
            pow *= w;
            if j + 1 == MAX_TERMS {
                return Err(Error::Truncation { terms: MAX_TERMS });
            }
        }

        let mut second = Sum::new(self.tol);
        let mut coef = 1.0;
        let mut pow = 1.0;
        for j in 0..MAX_TERMS {
            let jf = j as f64;
            let term = match kind {
                Integrand::Value => a2 * coef * pow,
                Integrand::Integral => {
                    let e = 2.0 * jf + self.m as f64 + 1.0;
                    a2 * coef * pow / e
                }
            };
            if second.push(term, true) {
                break;
            }
            coef *= (c - 0.5 + jf) * (c - 0.5 + jf) / ((s + 1.0 + jf) * (jf + 1.0));
            pow *= w;
            if j + 1 == MAX_TERMS {
                return Err(Error::Truncation { terms: MAX_TERMS });
            }
        }
        let scale = match kind {
            Integrand::Value => w.powf(s),
            // u^{m+1} = exp((m+1) ln u)
            Integrand::Integral => ((self.m as f64 + 1.0) * ln_x).exp(),
        };
        Ok(SeriesEval {
            value: first.total + scale * second.total,
            terms: first.count + second.count,
        })
    }

    /// Logarithmic case `c - a - b = n` integer (m = 2n).
    fn continued_even(&self, x: f64, kind: Integrand) -> Result<SeriesEval> {
        let n = self.m / 2;
        let nf = n as f64;
        let pre1 = (ln_gamma(nf) + ln_gamma(nf + 1.0) - 2.0 * ln_gamma(nf + 0.5)).exp();
        let (w, ln_x) = match kind {
            Integrand::Value => (x, x.ln()),
            Integrand::Integral => (x * x, x.ln()),
        };

        // finite polynomial part
        let mut finite = 0.0;
        let mut coef = 1.0;
        let mut pow = 1.0;
        for k in 0..n {
            let kf = k as f64;
            finite += match kind {
                Integrand::Value => coef * pow,
                Integrand::Integral => coef * pow * x / (2.0 * kf + 1.0),
            };
            if k + 1 < n {
                coef *= (0.5 + kf) * (0.5 + kf) / ((kf + 1.0) * (1.0 - nf + kf));
            }
            pow *= w;
        }
        finite *= pre1;

        if w == 0.0 {
            return Ok(SeriesEval {
                value: finite,
                terms: n,
            });
        }

        // (-1)^n / π · w^n Σ_k e_k w^k (ln w + d_k), e_0 = 1
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut harmonic_k = 0.0; // H_k
        let mut harmonic_kn: f64 = (1..=n).map(|i| 1.0 / i as f64).sum(); // H_{k+n}
        let mut odd_kn: f64 = (1..=n).map(|i| 2.0 / (2 * i - 1) as f64).sum();
        let mut log_part = Sum::new(self.tol);
        let mut e = 1.0;
        let mut pow = 1.0;
        for k in 0..MAX_TERMS {
            let kf = k as f64;
            let d = -harmonic_k - harmonic_kn - 4.0 * LN_2 + 2.0 * odd_kn;
            let term = match kind {
                Integrand::Value => e * pow * (ln_x + d),
                Integrand::Integral => {
                    // ∫_0^u v^N (2 ln v + d) dv, N = m + 2k
                    let np1 = (self.m + 2 * k + 1) as f64;
                    e * pow * x * ((2.0 * ln_x + d) / np1 - 2.0 / (np1 * np1))
                }
            };
            if log_part.push(term, true) {
                break;
            }
            e *= (nf + 0.5 + kf) * (nf + 0.5 + kf) / ((kf + 1.0) * (kf + nf + 1.0));
            pow *= w;
            harmonic_k += 1.0 / (kf + 1.0);
            harmonic_kn += 1.0 / (kf + nf + 1.0);
            odd_kn += 2.0 / (2.0 * (kf + nf + 1.0) - 1.0);
            if k + 1 == MAX_TERMS {
                return Err(Error::Truncation { terms: MAX_TERMS });
            }
        }
        let wn = w.powi(n as i32);
        Ok(SeriesEval {
            value: finite - sign / PI * wn * log_part.total,
            terms: n + log_part.count,
        })
    }

    /// `p(sin δ)` with the `j = 0` term optionally removed.
    pub fn p(&self, delta: f64) -> Result<SeriesEval> {
        let t = delta.sin();
        if self.uses_power_series(delta) {
            self.p_power(t, 0)
        } else {
            let cos = delta.cos();
            let f = self.hyp_near_one(cos * cos)?;
            Ok(SeriesEval {
                value: t * f.value,
                terms: f.terms,
            })
        }
    }

    /// `Σ_{j >= 1} b_j sin^{2j+1} δ`, for the cancellation-free form of G'.
    pub fn p_tail(&self, delta: f64) -> Result<SeriesEval> {
        self.p_power(delta.sin(), 1)
    }

    /// `Σ_{j >= 1} b_j I_{2j+1}(δ)`, for the cancellation-free form of G.
    pub fn q_tail(&self, delta: f64) -> Result<SeriesEval> {
        self.q_power(delta, 1)
    }

    /// `∫_{δ}^{π/2} p(sin φ) dφ` for `π/4 <= δ <= π/2`.
    fn q_band(&self, delta: f64) -> Result<SeriesEval> {
        self.hyp_near_one_integral(delta.cos().max(0.0))
    }

    /// `q(π/2)`.
    pub fn q_half(&self) -> Result<SeriesEval> {
        if self.m > CONNECTION_MAX_DIM {
            return self.q_power(FRAC_PI_2, 0);
        }
        let head = self.q_power(FRAC_PI_4, 0)?;
        let band = self.q_band(FRAC_PI_4)?;
        Ok(SeriesEval {
            value: head.value + band.value,
            terms: head.terms + band.terms,
        })
    }

    /// `q(δ)` for `0 <= δ < π`.
    pub fn q(&self, delta: f64) -> Result<SeriesEval> {
        if self.m > CONNECTION_MAX_DIM || delta <= FRAC_PI_4 {
            return self.q_power(delta, 0);
        }
        let half = self.q_half()?;
        let (value, extra) = if delta >= 3.0 * FRAC_PI_4 {
            let r = self.q_power(PI - delta, 0)?;
            (2.0 * half.value - r.value, r.terms)
        } else if delta <= FRAC_PI_2 {
            let r = self.q_band(delta)?;
            (half.value - r.value, r.terms)
        } else {
            let r = self.q_band(PI - delta)?;
            (half.value + r.value, r.terms)
        };
        Ok(SeriesEval {
            value,
            terms: half.terms + extra,
        })
    }

    /// Whether G and G' should use the cancellation-free small-angle form.
    pub fn small_angle_form(&self, delta: f64) -> bool {
        self.m > CONNECTION_MAX_DIM || delta <= FRAC_PI_4
    }
}

#[derive(Debug, Clone, Copy)]
enum Integrand {
    Value,
    Integral,
}

/// Accumulator that stops once a term drops below `tol` times the first term.
struct Sum {
    tol: f64,
    lead: f64,
    total: f64,
    count: usize,
}

impl Sum {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            lead: 0.0,
            total: 0.0,
            count: 0,
        }
    }

    /// Adds a term; returns true once the series may be truncated.
    fn push(&mut self, term: f64, may_stop: bool) -> bool {
        if self.count == 0 {
            self.lead = term.abs();
        }
        self.total += term;
        self.count += 1;
        may_stop && term.abs() <= self.tol * self.lead.max(self.total.abs())
    }
}
