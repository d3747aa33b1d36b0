//! Polar and spherical integration of non-negative functions on ℝ² / ℝ³ and
//! sup searches, used for kernel norms that do not factorize.

use std::f64::consts::PI;

use crate::quadrature::{compass_maximize, integrate_lenient, integrate_semi_infinite};
use crate::Result;

const INNER_TOL: f64 = 1e-11;

/// (∫_{ℝ³} F(x)^p dx)^{1/p}, radial variable mapped from [0, ∞) with length
/// scale `scale`.
pub fn spherical_lp<F: Fn([f64; 3]) -> f64>(f: F, p: f64, scale: f64, rel_tol: f64) -> Result<f64> {
    let phi_breaks = [0.5 * PI, PI, 1.5 * PI];
    let theta_breaks = [0.5 * PI];
    let shell = |r: f64| -> f64 {
        let inner = |theta: f64| -> f64 {
            let (st, ct) = theta.sin_cos();
            let g = |phi: f64| {
                let (sp, cp) = phi.sin_cos();
                f([r * st * cp, r * st * sp, r * ct]).powf(p)
            };
            st * integrate_lenient(g, 0.0, 2.0 * PI, &phi_breaks, 1e-300, INNER_TOL).value
        };
        r * r * integrate_lenient(inner, 0.0, PI, &theta_breaks, 1e-300, INNER_TOL).value
    };
    let q = integrate_semi_infinite(|u| shell(scale * u) * scale, 0.0, 1e-300, rel_tol)?;
    Ok(q.value.powf(1.0 / p))
}

/// (∫_{ℝ²} F(x)^p dx)^{1/p}.
pub fn polar_lp<F: Fn([f64; 2]) -> f64>(f: F, p: f64, scale: f64, rel_tol: f64) -> Result<f64> {
    let phi_breaks = [0.5 * PI, PI, 1.5 * PI];
    let ring = |r: f64| -> f64 {
        let g = |phi: f64| {
            let (sp, cp) = phi.sin_cos();
            f([r * cp, r * sp]).powf(p)
        };
        r * integrate_lenient(g, 0.0, 2.0 * PI, &phi_breaks, 1e-300, INNER_TOL).value
    };
    let q = integrate_semi_infinite(|u| ring(scale * u) * scale, 0.0, 1e-300, rel_tol)?;
    Ok(q.value.powf(1.0 / p))
}

/// sup of F over the ball of radius `radius`: scan in spherical coordinates,
/// then refine the best few candidates by compass search.
pub fn sup_3d<F: Fn([f64; 3]) -> f64>(f: F, radius: f64) -> f64 {
    let to_x = |v: &[f64]| {
        let (st, ct) = v[1].sin_cos();
        let (sp, cp) = v[2].sin_cos();
        [v[0] * st * cp, v[0] * st * sp, v[0] * ct]
    };
    let (nr, nt, np) = (240, 48, 96);
    let mut cands: Vec<(f64, [f64; 3])> = Vec::new();
    let mut best0 = f([0.0; 3]);
    for ir in 1..=nr {
        // Quadratic spacing resolves structure near the origin.
        let r = radius * (ir as f64 / nr as f64).powi(2);
        for it in 0..=nt {
            let th = PI * it as f64 / nt as f64;
            for ip in 0..np {
                let ph = 2.0 * PI * ip as f64 / np as f64;
                let v = f(to_x(&[r, th, ph]));
                cands.push((v, [r, th, ph]));
            }
        }
    }
    top_first(&mut cands, 8);
    for (_, c) in cands.iter().take(8) {
        let step = [radius / nr as f64 * 2.0, PI / nt as f64, 2.0 * PI / np as f64];
        let (_, v) = compass_maximize(
            |v| f(to_x(v)),
            c,
            &step,
            &[0.0, 0.0, -4.0 * PI],
            &[radius, PI, 4.0 * PI],
        );
        best0 = best0.max(v);
    }
    best0
}

/// sup of F over the disc of radius `radius`.
pub fn sup_2d<F: Fn([f64; 2]) -> f64>(f: F, radius: f64) -> f64 {
    let to_x = |v: &[f64]| [v[0] * v[1].cos(), v[0] * v[1].sin()];
    let (nr, np) = (400, 180);
    let mut cands: Vec<(f64, [f64; 2])> = Vec::new();
    let mut best = f([0.0; 2]);
    for ir in 1..=nr {
        let r = radius * (ir as f64 / nr as f64).powi(2);
        for ip in 0..np {
            let ph = 2.0 * PI * ip as f64 / np as f64;
            cands.push((f(to_x(&[r, ph])), [r, ph]));
        }
    }
    top_first(&mut cands, 8);
    for (_, c) in cands.iter().take(8) {
        let step = [radius / nr as f64 * 2.0, 2.0 * PI / np as f64];
        let (_, v) = compass_maximize(|v| f(to_x(v)), c, &step, &[0.0, -4.0 * PI], &[radius, 4.0 * PI]);
        best = best.max(v);
    }
    best
}

fn top_first<T>(c: &mut [(f64, T)], k: usize) {
    if c.len() > k {
        c.select_nth_unstable_by(k, |a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    }
}
