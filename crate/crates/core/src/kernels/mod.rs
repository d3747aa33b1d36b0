//! Heat-type kernels: the 3D, 2D and 1D Gaussians G, G_h, G_v, the
//! anisotropic kernels K and K̃, and the heat-regularized Newtonian potential N.
//!
//! Each kernel is available pointwise, as a Fourier symbol for periodic
//! convolution, and through its (weighted, anisotropic) Lebesgue norms.

pub mod cubature;
pub mod gauss;
pub mod kfamily;
pub mod newton;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Zip;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{forward, inverse, VectorField};
use crate::fit::{loglog_fit, Fit};
use crate::norms::{check_exponent, inv};
use crate::tolerances::{GAUSS_TRUNCATION, MIN_FIT_DECADES_KERNEL, MIN_FIT_POINTS};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    Gauss3,
    Gauss2,
    Gauss1,
    K,
    KTilde,
    N,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelKind::Gauss3 => "Gauss3",
            KernelKind::Gauss2 => "Gauss2",
            KernelKind::Gauss1 => "Gauss1",
            KernelKind::K => "K",
            KernelKind::KTilde => "Ktilde",
            KernelKind::N => "N",
        };
        f.write_str(s)
    }
}

impl FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "gauss3" | "g" => KernelKind::Gauss3,
            "gauss2" | "gh" => KernelKind::Gauss2,
            "gauss1" | "gv" => KernelKind::Gauss1,
            "k" => KernelKind::K,
            "ktilde" => KernelKind::KTilde,
            "n" => KernelKind::N,
            _ => return Err(Error::InvalidArgument(format!("unknown kernel kind '{s}'"))),
        })
    }
}

/// A kernel with derivatives ∂₁^{β₁}∂₂^{β₂}(−Δ_h)^{γ/2}∂₃^{v} and weight order m.
/// The weight is |x| for Gauss3 and N, |x_h| for Gauss2, K and K̃, |x₃| for Gauss1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub beta: [u32; 2],
    pub gamma: u32,
    pub vertical: u32,
    pub m: u32,
}

impl KernelSpec {
    pub fn plain(kind: KernelKind) -> Self {
        KernelSpec { kind, beta: [0, 0], gamma: 0, vertical: 0, m: 0 }
    }

    pub fn with_beta(mut self, b1: u32, b2: u32) -> Self {
        self.beta = [b1, b2];
        self
    }

    pub fn with_gamma(mut self, g: u32) -> Self {
        self.gamma = g;
        self
    }

    pub fn with_vertical(mut self, v: u32) -> Self {
        self.vertical = v;
        self
    }

    pub fn with_weight(mut self, m: u32) -> Self {
        self.m = m;
        self
    }

    pub fn horizontal_order(&self) -> u32 {
        self.beta[0] + self.beta[1]
    }

    /// Total derivative order counted with the half-Laplacian power.
    pub fn order(&self) -> u32 {
        self.horizontal_order() + self.gamma + self.vertical
    }

    fn has_derivatives(&self) -> bool {
        self.order() > 0
    }

    /// Derivative factor (ik₁)^{β₁}(ik₂)^{β₂}|k_h|^γ(ik₃)^v.
    pub fn derivative_symbol(&self, k: [f64; 3]) -> Complex64 {
        let a = (k[0] * k[0] + k[1] * k[1]).sqrt();
        let mut d = Complex64::new(a.powi(self.gamma as i32), 0.0);
        let ik = |x: f64| Complex64::new(0.0, x);
        for _ in 0..self.beta[0] {
            d *= ik(k[0]);
        }
        for _ in 0..self.beta[1] {
            d *= ik(k[1]);
        }
        for _ in 0..self.vertical {
            d *= ik(k[2]);
        }
        d
    }

    /// Check the norm hypothesis for (p, q); the error names the failing inequality.
    pub fn check_hypothesis(&self, p: f64, q: f64) -> Result<()> {
        check_exponent(p)?;
        check_exponent(q)?;
        if self.m > 1 {
            return Err(Error::Unsupported(format!("weight order {}", self.m)));
        }
        match self.kind {
            KernelKind::K | KernelKind::KTilde => {
                let lhs = (self.horizontal_order() + self.gamma) as f64;
                let rhs = 2.0 * inv(p) + inv(q) - 1.0 + self.m as f64;
                if lhs > rhs {
                    Ok(())
                } else {
                    Err(Error::Hypothesis(format!(
                        "|beta| + gamma > 2/p + 1/q - 1 + m fails: {lhs} <= {rhs} (p = {p}, q = {q}, m = {})",
                        self.m
                    )))
                }
            }
            KernelKind::N => {
                let a = (self.horizontal_order() + self.vertical) as f64;
                let lhs = 1.5 * (1.0 - inv(p)) + a / 2.0 - self.m as f64 / 2.0;
                if lhs > 1.0 {
                    Ok(())
                } else {
                    Err(Error::Hypothesis(format!(
                        "3/2 (1 - 1/p) + |alpha|/2 - m/2 > 1 fails: {lhs} <= 1 (p = {p}, m = {})",
                        self.m
                    )))
                }
            }
            _ => Ok(()),
        }
    }

    /// Scaling exponent of the norm in t.
    pub fn predicted_exponent(&self, p: f64, q: f64) -> f64 {
        let (ip, iq) = (inv(p), inv(q));
        let hb = self.horizontal_order() as f64;
        let v = self.vertical as f64;
        let g = self.gamma as f64;
        let m = self.m as f64 / 2.0;
        match self.kind {
            KernelKind::Gauss3 => -(1.0 - ip) - 0.5 * (1.0 - iq) - (hb + g + v) / 2.0 + m,
            KernelKind::Gauss2 => -(1.0 - ip) - (hb + g) / 2.0 + m,
            KernelKind::Gauss1 => -0.5 * (1.0 - iq) - v / 2.0 + m,
            KernelKind::K | KernelKind::KTilde => {
                -(1.0 - ip) - 0.5 * (1.0 - iq) - (hb + g - 2.0) / 2.0 - v / 2.0 + m
            }
            KernelKind::N => -1.5 * (1.0 - ip) - (hb + v) / 2.0 + m + 1.0,
        }
    }
}

/// Which heat semigroup a kernel's symbol carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Semigroup {
    /// e^{-t|k|²}
    Full,
    /// e^{-t|k_h|²}
    Horizontal,
    /// e^{-t k₃²}
    Vertical,
}

impl Semigroup {
    #[inline]
    pub fn rate(self, k: [f64; 3]) -> f64 {
        match self {
            Semigroup::Full => k[0] * k[0] + k[1] * k[1] + k[2] * k[2],
            Semigroup::Horizontal => k[0] * k[0] + k[1] * k[1],
            Semigroup::Vertical => k[2] * k[2],
        }
    }
}

impl KernelSpec {
    /// Time-independent factor R(k) with symbol(t, k) = e^{-t λ(k)} R(k).
    /// Singular points (k = 0 for K and N, k_h = 0 for K̃ without γ) return 0.
    pub fn static_symbol(&self, k: [f64; 3]) -> Complex64 {
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let a = (k[0] * k[0] + k[1] * k[1]).sqrt();
        match self.kind {
            KernelKind::Gauss3 | KernelKind::Gauss2 | KernelKind::Gauss1 => self.derivative_symbol(k),
            KernelKind::K | KernelKind::N => {
                if k2 == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.derivative_symbol(k) / k2
                }
            }
            KernelKind::KTilde => {
                if k2 == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                // −i k₃ |k_h|^{γ−1} (ik_h)^β (ik₃)^v / |k|², combined before dividing.
                let reduced = if self.gamma >= 1 {
                    KernelSpec { gamma: self.gamma - 1, ..*self }.derivative_symbol(k)
                } else if a == 0.0 {
                    return Complex64::new(0.0, 0.0);
                } else {
                    self.derivative_symbol(k) / a
                };
                Complex64::new(0.0, -k[2]) * reduced / k2
            }
        }
    }

    pub fn semigroup(&self) -> Semigroup {
        match self.kind {
            KernelKind::Gauss3 | KernelKind::N => Semigroup::Full,
            KernelKind::Gauss2 | KernelKind::K | KernelKind::KTilde => Semigroup::Horizontal,
            KernelKind::Gauss1 => Semigroup::Vertical,
        }
    }

    /// Continuum Fourier transform of the kernel at wavevector k.
    pub fn symbol(&self, t: f64, k: [f64; 3]) -> Complex64 {
        self.static_symbol(k) * (-t * self.semigroup().rate(k)).exp()
    }
}

/// Pointwise value at (t, x). Gaussians accept derivatives; N accepts |α| ≤ 2;
/// K and K̃ only the plain kernel.
pub fn eval_kernel(spec: &KernelSpec, t: f64, x: [f64; 3]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel time must be positive, got {t}")));
    }
    let w = match spec.kind {
        KernelKind::Gauss3 | KernelKind::N => (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt(),
        KernelKind::Gauss1 => x[2].abs(),
        _ => (x[0] * x[0] + x[1] * x[1]).sqrt(),
    }
    .powi(spec.m as i32);
    if spec.gamma > 0 {
        return Err(Error::Unsupported("(-Delta_h)^(gamma/2) exists here only as a Fourier multiplier".into()));
    }
    let v = match spec.kind {
        KernelKind::Gauss3 => {
            gauss::dgauss(spec.beta[0], t, x[0]) * gauss::dgauss(spec.beta[1], t, x[1]) * gauss::dgauss(spec.vertical, t, x[2])
        }
        KernelKind::Gauss2 => gauss::dgauss(spec.beta[0], t, x[0]) * gauss::dgauss(spec.beta[1], t, x[1]),
        KernelKind::Gauss1 => gauss::dgauss(spec.vertical, t, x[2]),
        KernelKind::K | KernelKind::KTilde => {
            if spec.has_derivatives() {
                return Err(Error::Unsupported("pointwise derivatives of K".into()));
            }
            if spec.kind == KernelKind::K {
                kfamily::k_value(t, x)?
            } else {
                kfamily::ktilde_value(t, x)?
            }
        }
        KernelKind::N => {
            if spec.order() > 2 {
                return Err(Error::Unsupported("N derivatives above second order".into()));
            }
            newton::derivative(t, [spec.beta[0], spec.beta[1], spec.vertical], x)
        }
    };
    Ok(w * v)
}

/// ‖ weight^m · derivative(kernel)(t) ‖_{L^p_h L^q_v}. Gauss2 uses p only and
/// Gauss1 uses q only; Gauss3 with m = 1 and N need p = q.
pub fn kernel_norm(spec: &KernelSpec, t: f64, p: f64, q: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel time must be positive, got {t}")));
    }
    spec.check_hypothesis(p, q)?;
    let s = t.sqrt();
    match spec.kind {
        KernelKind::Gauss3 | KernelKind::Gauss2 | KernelKind::Gauss1 => {
            if spec.gamma % 2 == 1 {
                return Err(Error::Unsupported("odd gamma for Gaussian norms".into()));
            }
            // Even γ: (−Δ_h)^{γ/2} is a differential operator; only γ = 0 is offered.
            if spec.gamma != 0 {
                return Err(Error::Unsupported("gamma > 0 for Gaussian norms".into()));
            }
            gauss_norm(spec, t, p, q, s)
        }
        KernelKind::K | KernelKind::KTilde => kfamily::kfamily_norm(spec, t, p, q),
        KernelKind::N => {
            if p != q {
                return Err(Error::Unsupported("anisotropic norms of N".into()));
            }
            if spec.gamma != 0 || spec.order() > 2 {
                return Err(Error::Unsupported("N norms support |alpha| <= 2 without gamma".into()));
            }
            let alpha = [spec.beta[0], spec.beta[1], spec.vertical];
            let m = spec.m as i32;
            let f = move |x: [f64; 3]| {
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                r.powi(m) * newton::derivative(t, alpha, x).abs()
            };
            if p.is_infinite() {
                if spec.order() == 0 && m == 0 {
                    return Ok(newton::origin_value(t));
                }
                Ok(cubature::sup_3d(f, 8.0 * s))
            } else {
                cubature::spherical_lp(f, p, s, 1e-9)
            }
        }
    }
}

fn gauss_norm(spec: &KernelSpec, t: f64, p: f64, q: f64, s: f64) -> Result<f64> {
    let [b1, b2] = spec.beta;
    let v = spec.vertical;
    let d = gauss::dgauss;
    match (spec.kind, spec.m) {
        (KernelKind::Gauss1, m) => gauss::norm_1d(v, m, t, q),
        (KernelKind::Gauss2, 0) => Ok(gauss::norm_1d(b1, 0, t, p)? * gauss::norm_1d(b2, 0, t, p)?),
        (KernelKind::Gauss3, 0) => {
            Ok(gauss::norm_1d(b1, 0, t, p)? * gauss::norm_1d(b2, 0, t, p)? * gauss::norm_1d(v, 0, t, q)?)
        }
        (KernelKind::Gauss2, _) => {
            let f = |x: [f64; 2]| (x[0] * x[0] + x[1] * x[1]).sqrt() * (d(b1, t, x[0]) * d(b2, t, x[1])).abs();
            if p.is_infinite() {
                Ok(cubature::sup_2d(f, GAUSS_TRUNCATION * s))
            } else {
                cubature::polar_lp(f, p, s, 1e-10)
            }
        }
        (KernelKind::Gauss3, _) => {
            if p != q {
                return Err(Error::Unsupported("weighted anisotropic Gaussian norms".into()));
            }
            let f = |x: [f64; 3]| {
                (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() * (d(b1, t, x[0]) * d(b2, t, x[1]) * d(v, t, x[2])).abs()
            };
            if p.is_infinite() {
                Ok(cubature::sup_3d(f, GAUSS_TRUNCATION * s))
            } else {
                cubature::spherical_lp(f, p, s, 1e-10)
            }
        }
        _ => unreachable!("non-Gaussian kind in gauss_norm"),
    }
}

/// Least-squares exponent of t ↦ kernel_norm(spec, t, p, q).
pub fn fit_kernel_exponent(spec: &KernelSpec, p: f64, q: f64, t_samples: &[f64]) -> Result<Fit> {
    if t_samples.len() < MIN_FIT_POINTS {
        return Err(Error::DegenerateFit(format!("{} samples, need {MIN_FIT_POINTS}", t_samples.len())));
    }
    let lo = t_samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t_samples.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log10() < MIN_FIT_DECADES_KERNEL - 1e-9 {
        return Err(Error::DegenerateFit(format!("samples span {:.2} decades, need {MIN_FIT_DECADES_KERNEL}", (hi / lo).log10())));
    }
    let norms = t_samples.iter().map(|&t| kernel_norm(spec, t, p, q)).collect::<Result<Vec<_>>>()?;
    loglog_fit(t_samples, &norms)
}

/// Periodic convolution of every component of `f` with the kernel at time t,
/// computed by sampling the continuum symbol at the grid wavenumbers.
pub fn convolve_kernel(spec: &KernelSpec, f: &VectorField, t: f64) -> Result<VectorField> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let grid = f.grid().clone();
    let singular_zero = matches!(spec.kind, KernelKind::K | KernelKind::N) && !spec.has_derivatives();
    let mut comps = f.components().clone();
    for c in comps.iter_mut() {
        let mut s = forward(&grid, c.view());
        if singular_zero {
            let mean = s[[0, 0, 0]].norm() / grid.len() as f64;
            let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if mean > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(format!(
                    "{} has a singular zero mode and the input mean {mean:.3e} is nonzero",
                    spec.kind
                )));
            }
        }
        let zero_nyquist = spec.has_derivatives();
        Zip::indexed(&mut s).par_for_each(|(i, j, l), v| {
            if zero_nyquist && grid.is_nyquist(i, j, l) {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= spec.symbol(t, grid.wavevector(i, j, l));
            }
        });
        *c = inverse(&grid, s.view());
    }
    VectorField::from_components(&grid, comps)
}

/// Three-dimensional heat kernel value G(t, x).
pub fn heat3(t: f64, x: [f64; 3]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    (4.0 * PI * t).powf(-1.5) * (-r2 / (4.0 * t)).exp()
}

/// Two-dimensional heat kernel value G_h(t, x_h).
pub fn heat2(t: f64, x: [f64; 2]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    (-r2 / (4.0 * t)).exp() / (4.0 * PI * t)
}
