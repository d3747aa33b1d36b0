//! The anisotropic kernels K(t,x) = ∫₀^∞ G_h(t+s, x_h) G_v(s, x₃) ds and
//! K̃ = sgn(x₃) K.
//!
//! Norms of derivatives are computed from the partial Fourier transform in
//! x_h, which is explicit in x₃:
//! F_h K(t, k_h, x₃) = e^{-t|k_h|²} e^{-|k_h||x₃|} / (2|k_h|).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use super::KernelSpec;
use crate::fft::ifft2_unnormalized;
use crate::norms::inv;
use crate::quadrature::{gauss_legendre, integrate_semi_infinite};
use crate::{Error, Result};

/// K(t, x) by quadrature in σ = √s: π^{-1/2} ∫₀^∞ G_h(t+σ², x_h) e^{-x₃²/4σ²} dσ.
pub fn k_value(t: f64, x: [f64; 3]) -> Result<f64> {
    let rh2 = x[0] * x[0] + x[1] * x[1];
    let z2 = x[2] * x[2];
    let integrand = |sigma: f64| {
        let s = sigma * sigma;
        let gh = (-rh2 / (4.0 * (t + s))).exp() / (4.0 * PI * (t + s));
        let gv = if sigma == 0.0 { if z2 == 0.0 { 1.0 } else { 0.0 } } else { (-z2 / (4.0 * s)).exp() };
        gh * gv
    };
    let sc = t.sqrt();
    let q = integrate_semi_infinite(|u| sc * integrand(sc * u), 0.0, 1e-300, 1e-12)?;
    Ok(q.value / PI.sqrt())
}

/// K̃(t, x) = sgn(x₃) K(t, x) with sgn(0) = 0.
pub fn ktilde_value(t: f64, x: [f64; 3]) -> Result<f64> {
    if x[2] == 0.0 {
        return Ok(0.0);
    }
    Ok(x[2].signum() * k_value(t, x)?)
}

/// Horizontal box side and resolution for partial-Fourier norms, in units of √t.
const BOX_FACTOR: f64 = 32.0;
const BOX_POINTS: usize = 256;

/// Vertical sample panels (units of √t) with Gauss–Legendre nodes on each.
fn vertical_samples(sqrt_t: f64) -> Vec<(f64, f64)> {
    let edges = [0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let (x, w) = gauss_legendre(12);
    let mut out = Vec::new();
    for e in edges.windows(2) {
        let (a, b) = (e[0] * sqrt_t, e[1] * sqrt_t);
        for (xi, wi) in x.iter().zip(&w) {
            out.push((0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi));
        }
    }
    out
}

/// Partial transform of ∇_h^β (−Δ_h)^{γ/2} ∂₃^v K at height z > 0, as a
/// function of k_h. K̃ coincides with K there.
fn vertical_factor(a: f64, z: f64, v: u32) -> f64 {
    match v {
        0 => (-a * z).exp() / (2.0 * a),
        _ => -(-a * z).exp() / 2.0,
    }
}

/// ‖ |x_h|^m ∇_h^β (−Δ_h)^{γ/2} ∂₃^v K(t) ‖_{L^p_h L^q_v} (identical for K̃).
pub(crate) fn kfamily_norm(spec: &KernelSpec, t: f64, p: f64, q: f64) -> Result<f64> {
    let s = spec.beta[0] + spec.beta[1] + spec.gamma;
    if spec.vertical > 1 {
        return Err(Error::Unsupported(
            "vertical derivatives of order above one of K carry a delta in x3".into(),
        ));
    }
    if s == 0 {
        if spec.vertical == 0 && spec.m == 0 && p.is_infinite() && q.is_infinite() {
            // Positive kernel, maximal at the origin (the z → 0+ limit for K̃).
            return k_value(t, [0.0; 3]);
        }
        return Err(Error::Unsupported(
            "K norms without horizontal derivatives are only available for p = q = inf".into(),
        ));
    }
    let sq = t.sqrt();
    let lb = BOX_FACTOR * sq;
    let n = BOX_POINTS;
    let h = lb / n as f64;
    let kf = |i: usize| {
        let m = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
        2.0 * PI * m / lb
    };
    let coord = |i: usize| if i < n / 2 { i as f64 * h } else { (i as f64 - n as f64) * h };
    let mut zs = vertical_samples(sq);
    // z → 0+ sample for suprema.
    zs.insert(0, (1e-9 * sq, 0.0));

    let fields: Vec<(f64, Array2<f64>)> = zs
        .par_iter()
        .map(|&(z, w)| {
            let mut a2 = Array2::<Complex64>::zeros((n, n));
            for ((i, j), val) in a2.indexed_iter_mut() {
                if i == n / 2 || j == n / 2 {
                    continue;
                }
                let (k1, k2) = (kf(i), kf(j));
                let a = (k1 * k1 + k2 * k2).sqrt();
                if a == 0.0 {
                    // Limit of a^γ·Z(a, z) when β = 0; odd factors average to zero.
                    if spec.beta == [0, 0] && spec.vertical == 0 && spec.gamma == 1 {
                        *val = Complex64::new(0.5, 0.0);
                    }
                    continue;
                }
                let mut d = Complex64::new(a.powi(spec.gamma as i32), 0.0);
                for _ in 0..spec.beta[0] {
                    d *= Complex64::new(0.0, k1);
                }
                for _ in 0..spec.beta[1] {
                    d *= Complex64::new(0.0, k2);
                }
                *val = d * (-t * a * a).exp() * vertical_factor(a, z, spec.vertical);
            }
            ifft2_unnormalized(&mut a2);
            let mut r = Array2::<f64>::zeros((n, n));
            for ((i, j), v) in r.indexed_iter_mut() {
                let mut x = a2[[i, j]].re / (lb * lb);
                if spec.m > 0 {
                    let (x1, x2) = (coord(i), coord(j));
                    x *= (x1 * x1 + x2 * x2).sqrt().powi(spec.m as i32);
                }
                *v = x.abs();
            }
            (w, r)
        })
        .collect();

    let mut col = Array2::<f64>::zeros((n, n));
    for (w, f) in &fields {
        if q.is_infinite() {
            col.zip_mut_with(f, |c, v| *c = c.max(*v));
        } else if *w > 0.0 {
            // Even in z: the lower half-line doubles the weight.
            col.zip_mut_with(f, |c, v| *c += 2.0 * w * v.powf(q));
        }
    }
    if !q.is_infinite() {
        col.mapv_inplace(|c| c.powf(inv(q)));
    }
    let out = if p.is_infinite() {
        col.iter().fold(0.0_f64, |m, v| m.max(*v))
    } else {
        (col.iter().map(|v| v.powf(p)).sum::<f64>() * h * h).powf(1.0 / p)
    };
    Ok(out)
}
