//! One-dimensional heat kernel g_t(x) = (4πt)^{-1/2} e^{-x²/4t} and its derivatives.

use std::f64::consts::PI;

use crate::quadrature::{integrate_with_breaks, maximize_1d};
use crate::tolerances::GAUSS_TRUNCATION;
use crate::Result;

/// Physicists' Hermite polynomial H_n(ξ).
pub fn hermite(n: u32, xi: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * xi);
    if n == 0 {
        return h0;
    }
    for k in 1..n {
        let h2 = 2.0 * xi * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// ∂_x^a g_t(x) = (−1)^a (4t)^{−a/2} H_a(x / 2√t) g_t(x).
pub fn dgauss(a: u32, t: f64, x: f64) -> f64 {
    let g = (4.0 * PI * t).powf(-0.5) * (-x * x / (4.0 * t)).exp();
    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
    sign * (4.0 * t).powf(-(a as f64) / 2.0) * hermite(a, x / (2.0 * t.sqrt())) * g
}

/// Non-negative zeros of H_a (bisection on a fine scan).
pub fn hermite_zeros(a: u32) -> Vec<f64> {
    let mut zs = Vec::new();
    if a % 2 == 1 {
        zs.push(0.0);
    }
    let n = 20_000;
    let hmax = 2.0 + (2.0 * a as f64).sqrt() * 1.5;
    let mut prev_x = 1e-9;
    let mut prev = hermite(a, prev_x);
    for i in 1..=n {
        let x = hmax * i as f64 / n as f64;
        let v = hermite(a, x);
        if prev == 0.0 || prev.signum() != v.signum() {
            let (mut lo, mut hi) = (prev_x, x);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if hermite(a, lo).signum() == hermite(a, m).signum() {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            zs.push(0.5 * (lo + hi));
        }
        prev_x = x;
        prev = v;
    }
    zs
}

/// ‖ |x|^m ∂^a g_t ‖_{L^p(ℝ)} evaluated by quadrature in x (sup by search for p = ∞).
pub fn norm_1d(a: u32, m: u32, t: f64, p: f64) -> Result<f64> {
    let s = t.sqrt();
    let f = |x: f64| x.abs().powi(m as i32) * dgauss(a, t, x).abs();
    let r = 2.0 * GAUSS_TRUNCATION * s;
    if p.is_infinite() {
        return Ok(maximize_1d(f, 0.0, r, 4000).1);
    }
    let breaks: Vec<f64> = hermite_zeros(a).into_iter().map(|z| z * 2.0 * s).collect();
    let q = integrate_with_breaks(|x| f(x).powf(p), 0.0, r, &breaks, 1e-300, 1e-12)?;
    Ok((2.0 * q.value).powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 0.7), 1.0);
        assert!((hermite(3, 0.7) - (8.0 * 0.343 - 12.0 * 0.7)).abs() < 1e-13);
        assert!((hermite(4, 1.1) - (16.0 * 1.1f64.powi(4) - 48.0 * 1.21 + 12.0)).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (t, x, h) = (0.8, 0.6, 1e-5);
        for a in 0..3 {
            let fd = (dgauss(a, t, x + h) - dgauss(a, t, x - h)) / (2.0 * h);
            assert!((fd - dgauss(a + 1, t, x)).abs() < 1e-8);
        }
    }

    #[test]
    fn zeros_of_h2_and_h3() {
        let z2 = hermite_zeros(2);
        assert_eq!(z2.len(), 1);
        assert!((z2[0] - 0.5f64.sqrt()).abs() < 1e-12);
        let z3 = hermite_zeros(3);
        assert!((z3[1] - 1.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn elementary_norms() {
        // ‖g_t‖₁ = 1, ‖g_t‖_∞ = (4πt)^{-1/2}, ‖∂g_t‖₁ = 2 g_t(0), ‖|x| g_t‖₁ = 2√(t/π).
        for t in [0.3, 2.0] {
            assert!((norm_1d(0, 0, t, 1.0).unwrap() - 1.0).abs() < 1e-12);
            assert!((norm_1d(0, 0, t, f64::INFINITY).unwrap() - (4.0 * PI * t).powf(-0.5)).abs() < 1e-14);
            assert!((norm_1d(1, 0, t, 1.0).unwrap() - 2.0 * (4.0 * PI * t).powf(-0.5)).abs() < 1e-12);
            assert!((norm_1d(0, 1, t, 1.0).unwrap() - 2.0 * (t / PI).sqrt()).abs() < 1e-12);
        }
    }
}
