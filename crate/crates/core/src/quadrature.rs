//! Adaptive Gauss–Kronrod quadrature and simple maximization helpers.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

/// Integrate `f` over [a, b] split at `breaks`, bisecting the worst piece until
/// the summed error estimate is below max(abs_tol, rel_tol·|I|).
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quad> {
    let (q, converged) = adaptive(f, a, b, breaks, abs_tol, rel_tol);
    if converged {
        Ok(q)
    } else {
        Err(Error::Quadrature { estimate: q.error, tolerance: abs_tol.max(rel_tol * q.value.abs()) })
    }
}

/// As [`integrate_with_breaks`] but returns the best estimate even when the
/// tolerance is not met. Used for inner levels of nested integrals, whose
/// error is checked at the outer level.
pub fn integrate_lenient<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> Quad {
    adaptive(f, a, b, breaks, abs_tol, rel_tol).0
}

fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], abs_tol: f64, rel_tol: f64) -> (Quad, bool) {
    let mut pts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&x| x > a && x < b))
        .chain(std::iter::once(b))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in pts.windows(2) {
        let (v, e) = gk15(&mut f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    let max_pieces = 4000;
    let mut converged = true;
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_pieces {
            converged = false;
            break;
        }
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval exhausted at machine precision; accept what we have.
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
    // Re-sum to limit accumulated rounding from the running updates.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    (Quad { value, error }, converged)
}

pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    integrate_with_breaks(f, a, b, &[], abs_tol, rel_tol)
}

/// ∫_a^∞ f via x = a + u/(1−u), u ∈ [0, 1).
pub fn integrate_semi_infinite<F: FnMut(f64) -> f64>(mut f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<Quad> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let v = f(a + u / w) / (w * w);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Maximize a 1D function on [a, b]: dense scan then golden-section refinement.
pub fn maximize_1d<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, samples: usize) -> (f64, f64) {
    let h = (b - a) / samples as f64;
    let (mut best_x, mut best) = (a, f(a));
    for i in 1..=samples {
        let x = a + h * i as f64;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (mut lo, mut hi) = ((best_x - h).max(a), (best_x + h).min(b));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-14 * (1.0 + best_x.abs()) {
            break;
        }
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v > best {
            best = v;
            best_x = x;
        }
    }
    (best_x, best)
}

/// Compass search refinement of a local maximum in d dimensions, starting from
/// `x0` with initial steps `step`, within box bounds.
pub fn compass_maximize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut best = f(&x);
    let mut h = step.to_vec();
    for _ in 0..2000 {
        let mut improved = false;
        for k in 0..d {
            for s in [1.0, -1.0] {
                let mut y = x.clone();
                y[k] = (y[k] + s * h[k]).clamp(lower[k], upper[k]);
                let v = f(&y);
                if v > best {
                    best = v;
                    x = y;
                    improved = true;
                }
            }
        }
        if !improved {
            let mut done = true;
            for (hk, s0) in h.iter_mut().zip(step) {
                *hk *= 0.5;
                if *hk > 1e-13 * s0.abs().max(1e-300) {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
    }
    (x, best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gauss_legendre_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(8);
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exact() {
        let q = integrate(|x| 3.0 * x * x + 1.0, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((q.value - 10.0).abs() < 1e-13);
    }

    #[test]
    fn gaussian_on_half_line() {
        let q = integrate_semi_infinite(|x| (-x * x).exp(), 0.0, 1e-13, 1e-13).unwrap();
        assert!((q.value - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn kink_handled_by_breaks() {
        let q = integrate_with_breaks(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-14, 1e-14).unwrap();
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-14);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let q = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn maximize_smooth() {
        let (x, v) = maximize_1d(|x| x * (-x * x).exp(), 0.0, 5.0, 100);
        assert!((x - 0.5f64.sqrt()).abs() < 1e-7);
        assert!((v - 0.5f64.sqrt() * (-0.5f64).exp()).abs() < 1e-14);
        let (y, w) = compass_maximize(|p| -(p[0] - 1.0).powi(2) - (p[1] + 0.5).powi(2), &[0.0, 0.0], &[0.5, 0.5], &[-3.0, -3.0], &[3.0, 3.0]);
        assert!((y[0] - 1.0).abs() < 1e-10 && (y[1] + 0.5).abs() < 1e-10 && w.abs() < 1e-18);
    }
}
