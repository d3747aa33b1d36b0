//! The heat-regularized Newtonian potential
//! N(t,x) = ∫₀^∞ G(t+s, x) ds = erf(|x| / 2√t) / (4π|x|).

use std::f64::consts::PI;

use statrs::function::erf::erf;

use crate::tolerances::N_ORIGIN_RADIUS;

/// Radial profile f(r) and derivatives: (f, f', f'/r, f'').
#[derive(Clone, Copy, Debug)]
pub struct Radial {
    pub f: f64,
    pub df: f64,
    pub df_over_r: f64,
    pub d2f: f64,
}

/// Value of N at the origin: 2 (4π)^{-3/2} t^{-1/2}.
pub fn origin_value(t: f64) -> f64 {
    2.0 * (4.0 * PI).powf(-1.5) / t.sqrt()
}

/// N(t, x) as a function of r = |x|.
pub fn value(t: f64, r: f64) -> f64 {
    if r < N_ORIGIN_RADIUS * t.sqrt() {
        origin_value(t)
    } else {
        erf(r / (2.0 * t.sqrt())) / (4.0 * PI * r)
    }
}

/// Radial derivatives; a power series in z = r²/4t is used for z < 1 where
/// the closed form cancels.
pub fn radial(t: f64, r: f64) -> Radial {
    if r * r / (4.0 * t) < 1.0 {
        radial_series(t, r)
    } else {
        radial_closed(t, r)
    }
}

fn radial_series(t: f64, r: f64) -> Radial {
    let z = r * r / (4.0 * t);
    // f = c Σ (−z)^n / (n! (n+½)), c = (4π)^{-3/2} t^{-1/2}.
    let c = (4.0 * PI).powf(-1.5) / t.sqrt();
    let (mut f, mut g1, mut g2) = (0.0, 0.0, 0.0);
    let mut term = 1.0; // (−z)^n / n!
    for n in 0..40 {
        let nf = n as f64;
        let a = term / (nf + 0.5);
        f += a;
        g1 += 2.0 * nf * a;
        g2 += 2.0 * nf * (2.0 * nf - 1.0) * a;
        term *= -z / (nf + 1.0);
        if term.abs() < 1e-18 {
            break;
        }
    }
    // f'/r = c g1 / r² and f'' = c g2 / r², with the r → 0 limits below.
    let (df_over_r, d2f) = if z > 0.0 {
        (c * g1 / (r * r), c * g2 / (r * r))
    } else {
        let l = -2.0 * c / (1.5 * 4.0 * t);
        (l, l)
    };
    Radial { f: c * f, df: df_over_r * r, df_over_r, d2f }
}

fn radial_closed(t: f64, r: f64) -> Radial {
    let s = r / (2.0 * t.sqrt());
    let e = erf(s);
    let g = (-s * s).exp();
    let q = 4.0 * PI;
    let st = (PI * t).sqrt();
    let f = e / (q * r);
    let df = -e / (q * r * r) + g / (q * r * st);
    let d2f = 2.0 * e / (q * r.powi(3)) - 2.0 * g / (q * r * r * st) - g / (8.0 * PI * t * st);
    Radial { f, df, df_over_r: df / r, d2f }
}

/// ∂^α N(t, x) for |α| ≤ 2.
pub fn derivative(t: f64, alpha: [u32; 3], x: [f64; 3]) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let rad = radial(t, r);
    let axes: Vec<usize> = (0..3).flat_map(|a| std::iter::repeat(a).take(alpha[a] as usize)).collect();
    match axes.len() {
        0 => value(t, r),
        1 => rad.df_over_r * x[axes[0]],
        2 => {
            let (i, j) = (axes[0], axes[1]);
            let delta = if i == j { 1.0 } else { 0.0 };
            if r == 0.0 {
                return rad.df_over_r * delta;
            }
            let (ni, nj) = (x[i] / r, x[j] / r);
            rad.d2f * ni * nj + rad.df_over_r * (delta - ni * nj)
        }
        _ => panic!("N derivatives above second order are not implemented"),
    }
}
