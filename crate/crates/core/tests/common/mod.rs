//! Test-only numerical oracles.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

use smeary_core::family::sphere_volume;
use smeary_core::sphere::SpherePoint;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: (Kronrod estimate, error estimate).
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`: the panel
/// with the largest error estimate is bisected until the summed estimate is
/// below `tol` or `max_panels` is reached.
pub fn integrate_with(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
) -> f64 {
    let (v, e) = gk15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let val: f64 = panels.iter().map(|p| p.2).sum();
        if err <= tol.max(50.0 * f64::EPSILON * val.abs()) || panels.len() >= max_panels {
            return val;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (lv, le) = gk15(&mut f, lo, mid);
        let (rv, re) = gk15(&mut f, mid, hi);
        panels.push((lo, mid, lv, le));
        panels.push((mid, hi, rv, re));
    }
}

pub fn integrate(f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    integrate_with(f, a, b, tol, 500)
}

/// Nested quadrature over the rectangle `[a0, b0] × [a1, b1]`.
pub fn integrate_2d(
    f: impl Fn(f64, f64) -> f64,
    (a0, b0): (f64, f64),
    (a1, b1): (f64, f64),
    tol: f64,
) -> f64 {
    let span = (b0 - a0).abs().max(1e-300);
    integrate_with(
        |x| integrate_with(|y| f(x, y), a1, b1, 0.1 * tol / span, 200),
        a0,
        b0,
        tol,
        200,
    )
}

/// Distance between `p_δ = (sin δ, cos δ, 0)` and
/// `X = (sin ψ cos ω, -cos ψ, sin ψ sin ω)`, together with `|X - <X,p> p|`.
/// Computed via atan2 to stay accurate near the antipode.
pub fn dist_and_sin(delta: f64, psi: f64, om: f64) -> (f64, f64) {
    let p = [delta.sin(), delta.cos(), 0.0];
    let x = [psi.sin() * om.cos(), -psi.cos(), psi.sin() * om.sin()];
    let c: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
    let s = p
        .iter()
        .zip(&x)
        .map(|(a, b)| (b - c * a).powi(2))
        .sum::<f64>()
        .sqrt();
    (s.atan2(c), s)
}

/// Mean of `f` over ψ ∈ [0, π/2], ω ∈ [0, π] with the hemisphere weights of
/// S^m, `sin^{m-1} ψ sin^{m-2} ω`. The outer range is split at `ψ = δ`, where
/// the antipode of `p_δ` sits.
pub fn hemisphere_mean(m: usize, delta: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
    let w = |psi: f64, om: f64| psi.sin().powi(m as i32 - 1) * om.sin().powi(m as i32 - 2);
    let g = |psi: f64, om: f64| f(psi, om) * w(psi, om);
    let cut = if delta > 0.0 && delta < FRAC_PI_2 {
        delta
    } else {
        FRAC_PI_2
    };
    let mut num = integrate_2d(g, (0.0, cut), (0.0, PI), 1e-12);
    if cut < FRAC_PI_2 {
        num += integrate_2d(g, (cut, FRAC_PI_2), (0.0, PI), 1e-12);
    }
    let den = integrate_2d(w, (0.0, FRAC_PI_2), (0.0, PI), 1e-12);
    num / den
}

/// `E[d(p_δ, X)²]` for X uniform on the lower half of S^m, as a 2-D integral:
/// `ψ` is the angle from `-μ`, `ω` the angle of the horizontal part against
/// the direction of motion.
pub fn hemisphere_mean_sq(m: usize, delta: f64) -> f64 {
    hemisphere_mean(m, delta, |psi, om| dist_and_sin(delta, psi, om).0.powi(2))
}

/// `d/dδ E[d(p_δ, X)²]` in the same coordinates.
pub fn hemisphere_mean_sq_grad(m: usize, delta: f64) -> f64 {
    let (sd, cd) = delta.sin_cos();
    // d/dδ d² = -2 d <X, p'> / |X - <X,p> p| with p' = (cos δ, -sin δ, 0)
    hemisphere_mean(m, delta, |psi, om| {
        let (d, s) = dist_and_sin(delta, psi, om);
        if s == 0.0 {
            return 0.0;
        }
        let xp = cd * psi.sin() * om.cos() + sd * psi.cos();
        -2.0 * d * xp / s
    })
}

/// Crescent form on S²: `(1-α)δ² - (4πα/v_2) ∫ cos θ ∫_0^δ arcsin(cos θ sin φ) dφ dθ`.
pub fn crescent_m2(alpha: f64, delta: f64) -> f64 {
    let inner = integrate_2d(
        |th, ph| th.cos() * (th.cos() * ph.sin()).asin(),
        (-FRAC_PI_2, FRAC_PI_2),
        (0.0, delta),
        1e-12,
    );
    (1.0 - alpha) * delta * delta - 4.0 * PI * alpha / sphere_volume(2) * inner
}

/// Derivative of the crescent form with the tensor weights on S^m, m ∈ {2, 3}.
pub fn crescent_grad(m: usize, alpha: f64, delta: f64) -> f64 {
    let sd = delta.sin();
    let integral = match m {
        2 => integrate(
            |t| t.cos() * (t.cos() * sd).asin(),
            -FRAC_PI_2,
            FRAC_PI_2,
            1e-14,
        ),
        3 => integrate_2d(
            |a, b| a.cos() * b.cos().powi(2) * (a.cos() * b.cos() * sd).asin(),
            (-FRAC_PI_2, FRAC_PI_2),
            (-FRAC_PI_2, FRAC_PI_2),
            1e-12,
        ),
        _ => unreachable!(),
    };
    2.0 * (1.0 - alpha) * delta - 4.0 * PI * alpha / sphere_volume(m) * integral
}

/// Smallest Fréchet value over a latitude/longitude grid of spacing `h`.
pub fn grid_minimum(points: &[SpherePoint], h: f64) -> f64 {
    let nt = (PI / h).ceil() as usize;
    let np = (2.0 * PI / h).ceil() as usize;
    let xs: Vec<[f64; 3]> = points
        .iter()
        .map(|p| [p.coords()[0], p.coords()[1], p.coords()[2]])
        .collect();
    let mut best = f64::MAX;
    for i in 0..=nt {
        let (st, ct) = (i as f64 * PI / nt as f64).sin_cos();
        for j in 0..np {
            let (sp, cp) = (j as f64 * 2.0 * PI / np as f64).sin_cos();
            let g = [st * cp, ct, st * sp];
            let f: f64 = xs
                .iter()
                .map(|x| {
                    let c = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
                    let s = ((x[0] - c * g[0]).powi(2)
                        + (x[1] - c * g[1]).powi(2)
                        + (x[2] - c * g[2]).powi(2))
                    .sqrt();
                    s.atan2(c).powi(2)
                })
                .sum();
            best = best.min(f / xs.len() as f64);
        }
    }
    best
}

/// Random rotation of R^{m+1} from Gram-Schmidt on a Gaussian matrix.
pub fn rotation(dim: usize, mut gauss: impl FnMut() -> f64) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(dim);
    while q.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| gauss()).collect();
        for u in &q {
            let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(x, a)| *x -= d * a);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            q.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    q
}

pub fn rotate(r: &[Vec<f64>], p: &SpherePoint) -> SpherePoint {
    let c: Vec<f64> = r
        .iter()
        .map(|row| row.iter().zip(p.coords()).map(|(a, b)| a * b).sum())
        .collect();
    SpherePoint::new(c).unwrap()
}
