//! Pseudo-spectral time integration of the two anisotropic MHD systems.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array3, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{forward, spectral_l2_squared, MhdState, SpectralVector, Spectrum, VectorField};
use crate::fit::NormSeries;
use crate::grid::{DerivativeIndex, Grid};
use crate::linprop::PropagatorKind;
use crate::norms::{aniso_norm, Components};
use crate::tolerances::{CFL_NUMBER, DEALIAS_TWO_THIRDS, MAGNETIC_REPROJECT_INTERVAL, MAX_STEP_HALVINGS};
use crate::{Error, Result};

/// Which field carries the horizontal-only dissipation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SystemKind {
    /// Δ_h on u, Δ on B.
    #[serde(rename = "A", alias = "A_horizU_fullB")]
    A,
    /// Δ on u, Δ_h on B.
    #[serde(rename = "B", alias = "B_fullU_horizB")]
    B,
}

impl SystemKind {
    pub fn velocity_propagator(self) -> PropagatorKind {
        match self {
            SystemKind::A => PropagatorKind::HorizHeat,
            SystemKind::B => PropagatorKind::FullHeat,
        }
    }

    pub fn magnetic_propagator(self) -> PropagatorKind {
        match self {
            SystemKind::A => PropagatorKind::FullHeat,
            SystemKind::B => PropagatorKind::HorizHeat,
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            SystemKind::A => "A_horizU_fullB",
            SystemKind::B => "B_fullU_horizB",
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::A => "A",
            SystemKind::B => "B",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" | "A_horizU_fullB" => Ok(SystemKind::A),
            "B" | "b" | "B_fullU_horizB" => Ok(SystemKind::B),
            _ => Err(Error::InvalidArgument(format!("unknown system '{s}', expected A or B"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Ifrk4,
    Etd2,
}

fn default_dealias() -> f64 {
    DEALIAS_TWO_THIRDS
}

fn default_stride() -> usize {
    1
}

fn default_integrator() -> Integrator {
    Integrator::Ifrk4
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_dealias")]
    pub dealias: f64,
    /// Steps between samples.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default = "default_integrator")]
    pub integrator: Integrator,
    /// Disable to propagate the linear part only.
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Keep the full state at every sample.
    #[serde(default)]
    pub store_snapshots: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        SolverConfig {
            dt,
            t_end,
            dealias: DEALIAS_TWO_THIRDS,
            stride: 1,
            integrator: Integrator::Ifrk4,
            nonlinear: true,
            store_snapshots: false,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_snapshots(mut self) -> Self {
        self.store_snapshots = true;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    /// Number of steps; `t_end` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        self.validate()?;
        Ok((self.t_end / self.dt).round() as usize)
    }

    pub fn sample_dt(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("end time must be non-negative, got {}", self.t_end)));
        }
        let n = self.t_end / self.dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "end time {} is not a whole number of steps of {}",
                self.t_end, self.dt
            )));
        }
        if !(self.dealias > 0.5 && self.dealias < 1.0) {
            return Err(Error::InvalidArgument(format!("dealias fraction must lie in (1/2, 1), got {}", self.dealias)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArgument("stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldId {
    #[serde(alias = "u")]
    Velocity,
    #[serde(alias = "B", alias = "b")]
    Magnetic,
}

impl FieldId {
    pub fn symbol(self) -> &'static str {
        match self {
            FieldId::Velocity => "u",
            FieldId::Magnetic => "B",
        }
    }

    pub fn select(self, state: &MhdState) -> &VectorField {
        match self {
            FieldId::Velocity => &state.u,
            FieldId::Magnetic => &state.b,
        }
    }
}

/// A norm ‖∂^α f_c‖_{L^p_h L^q_v} sampled during a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub field: FieldId,
    pub components: Components,
    #[serde(default)]
    pub alpha: DerivativeIndex,
    pub p: f64,
    pub q: f64,
}

impl ObserverSpec {
    pub fn new(field: FieldId, components: Components, p: f64, q: f64) -> Self {
        ObserverSpec { field, components, alpha: DerivativeIndex::ZERO, p, q }
    }

    pub fn with_alpha(mut self, alpha: DerivativeIndex) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn label(&self) -> String {
        let mut s = format!("{}{}", self.field.symbol(), self.components.suffix());
        if !self.alpha.is_zero() {
            s = format!("d{}{}", self.alpha, s);
        }
        s
    }

    fn measure(&self, u_hat: &SpectralVector, b_hat: &SpectralVector, state: &MhdState) -> f64 {
        let grid = state.grid();
        let comps = self.components.indices();
        let parts: Vec<Array3<f64>> = if self.alpha.is_zero() {
            comps.iter().map(|&c| self.field.select(state).component(c).clone()).collect()
        } else {
            let s = match self.field {
                FieldId::Velocity => u_hat,
                FieldId::Magnetic => b_hat,
            };
            comps
                .iter()
                .map(|&c| {
                    let d = crate::field::derivative_spectrum(grid, s.component(c), self.alpha);
                    crate::field::inverse(grid, d.view())
                })
                .collect()
        };
        let mut mag = Array3::<f64>::zeros(grid.real_shape());
        for p in &parts {
            Zip::from(&mut mag).and(p).par_for_each(|m, v| *m += v * v);
        }
        mag.mapv_inplace(f64::sqrt);
        aniso_norm(grid, mag.view(), self.p, self.q)
    }
}

/// Dealiased spectra of the 21 quadratic products at one instant.
#[derive(Clone, Debug)]
pub struct Products {
    /// u_j u_l, j ≤ l.
    pub uu: Vec<Spectrum>,
    /// B_j B_l, j ≤ l.
    pub bb: Vec<Spectrum>,
    /// B_j u_l, all nine.
    pub bu: Vec<Spectrum>,
}

/// Slot of the unordered pair (j, l) among the six symmetric products.
#[inline]
pub fn sym_index(j: usize, l: usize) -> usize {
    let (a, b) = if j <= l { (j, l) } else { (l, j) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

pub const SYM_PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

impl Products {
    pub fn compute(u: &VectorField, b: &VectorField, dealias: f64) -> Products {
        let grid = u.grid().clone();
        let prod = |x: &Array3<f64>, y: &Array3<f64>| {
            let p = x * y;
            let mut s = forward(&grid, p.view());
            mask(&grid, &mut s, dealias);
            s
        };
        let uc = u.components();
        let bc = b.components();
        let uu = SYM_PAIRS.iter().map(|&(j, l)| prod(&uc[j], &uc[l])).collect();
        let bb = SYM_PAIRS.iter().map(|&(j, l)| prod(&bc[j], &bc[l])).collect();
        let bu = (0..9).map(|n| prod(&bc[n / 3], &uc[n % 3])).collect();
        Products { uu, bb, bu }
    }

    pub fn uu(&self, j: usize, l: usize) -> &Spectrum {
        &self.uu[sym_index(j, l)]
    }

    pub fn bb(&self, j: usize, l: usize) -> &Spectrum {
        &self.bb[sym_index(j, l)]
    }

    /// B_j u_l.
    pub fn bu(&self, j: usize, l: usize) -> &Spectrum {
        &self.bu[3 * j + l]
    }

    /// u_j B_l.
    pub fn ub(&self, j: usize, l: usize) -> &Spectrum {
        &self.bu[3 * l + j]
    }

    pub fn all(&self) -> impl Iterator<Item = &Spectrum> {
        self.uu.iter().chain(self.bb.iter()).chain(self.bu.iter())
    }
}

fn mask(grid: &Grid, s: &mut Spectrum, fraction: f64) {
    Zip::indexed(s).par_for_each(|(i, j, l), v| {
        if !grid.in_band(i, j, l, fraction) {
            *v = Complex64::new(0.0, 0.0);
        }
    });
}

/// What an observer sees at each sample.
pub struct Sample<'a> {
    pub kind: SystemKind,
    pub step: usize,
    pub t: f64,
    pub state: &'a MhdState,
    pub u_hat: &'a SpectralVector,
    pub b_hat: &'a SpectralVector,
    pub products: Option<&'a Products>,
}

/// Hook called at t = 0 and at every sample of a run.
pub trait Observer {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()>;

    fn needs_products(&self) -> bool {
        false
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub kind: SystemKind,
    pub config: SolverConfig,
    pub initial: MhdState,
    pub final_state: MhdState,
    /// Sample times, strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// Full states at the sample times when snapshots were requested.
    pub snapshots: Vec<MhdState>,
    /// ‖u‖² + ‖B‖² at the sample times.
    pub energy: Vec<f64>,
    /// Accumulated dissipation ∫₀^t D(s) ds at the sample times.
    pub dissipation: Vec<f64>,
    pub divergence: Vec<f64>,
    pub series: Vec<NormSeries>,
    pub halvings: usize,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<Grid> {
        self.initial.grid()
    }

    pub fn series(&self, label: &str, p: f64, q: f64) -> Option<&NormSeries> {
        self.series.iter().find(|s| s.label == label && s.p == p && s.q == q)
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence.iter().cloned().fold(0.0, f64::max)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Exponential factors e^{-λ_u h}, e^{-λ_B h} on the half spectrum.
struct Decay {
    u: Array3<f64>,
    b: Array3<f64>,
}

impl Decay {
    fn new(grid: &Grid, kind: SystemKind, h: f64) -> Decay {
        let build = |p: PropagatorKind| {
            let mut a = Array3::<f64>::zeros(grid.spectral_shape());
            Zip::indexed(&mut a).par_for_each(|(i, j, l), v| *v = (-h * p.rate(grid.wavevector(i, j, l))).exp());
            a
        };
        Decay { u: build(kind.velocity_propagator()), b: build(kind.magnetic_propagator()) }
    }

    fn factor(&self, c: usize) -> &Array3<f64> {
        if c < 3 {
            &self.u
        } else {
            &self.b
        }
    }
}

type State6 = [Spectrum; 6];

fn split(u: &SpectralVector, b: &SpectralVector) -> State6 {
    let [u0, u1, u2] = u.components().clone();
    let [b0, b1, b2] = b.components().clone();
    [u0, u1, u2, b0, b1, b2]
}

fn join(grid: &Arc<Grid>, v: State6) -> (SpectralVector, SpectralVector) {
    let [u0, u1, u2, b0, b1, b2] = v;
    (
        SpectralVector::from_components(grid, [u0, u1, u2]).expect("shapes match"),
        SpectralVector::from_components(grid, [b0, b1, b2]).expect("shapes match"),
    )
}

struct Nonlinear<'g> {
    grid: &'g Arc<Grid>,
    dealias: f64,
    enabled: bool,
}

struct Evaluation {
    n: State6,
    max_speed: f64,
}

impl Nonlinear<'_> {
    fn zero(&self) -> State6 {
        std::array::from_fn(|_| Spectrum::zeros(self.grid.spectral_shape()))
    }

    /// Dealiased nonlinear tendencies and the pointwise max of |u| and |B|.
    fn eval(&self, v: &State6, step: usize, t: f64) -> Result<Evaluation> {
        let grid = self.grid;
        let real: Vec<Array3<f64>> = v.iter().map(|s| crate::field::inverse(grid, s.view())).collect();
        if real.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite { step, t });
        }
        let speed = |c: &[Array3<f64>]| {
            let mut m = 0.0_f64;
            Zip::from(&c[0]).and(&c[1]).and(&c[2]).for_each(|a, b, d| m = m.max(a * a + b * b + d * d));
            m.sqrt()
        };
        let max_speed = speed(&real[0..3]).max(speed(&real[3..6]));
        if !self.enabled {
            return Ok(Evaluation { n: self.zero(), max_speed });
        }
        let (u, b) = (&real[0..3], &real[3..6]);
        let spec = |f: &dyn Fn(usize) -> f64| {
            let mut a = Array3::<f64>::zeros(grid.real_shape());
            let sl = a.as_slice_mut().expect("standard layout");
            for (idx, x) in sl.iter_mut().enumerate() {
                *x = f(idx);
            }
            let mut s = forward(grid, a.view());
            mask(grid, &mut s, self.dealias);
            s
        };
        let us: Vec<&[f64]> = u.iter().map(|a| a.as_slice().expect("standard layout")).collect();
        let bs: Vec<&[f64]> = b.iter().map(|a| a.as_slice().expect("standard layout")).collect();
        let s: Vec<Spectrum> = SYM_PAIRS
            .iter()
            .map(|&(j, l)| spec(&|i| us[j][i] * us[l][i] - bs[j][i] * bs[l][i]))
            .collect();
        // antisymmetric W_jl = B_j u_l − u_j B_l for (0,1), (0,2), (1,2)
        let w: Vec<Spectrum> = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(j, l)| spec(&|i| bs[j][i] * us[l][i] - us[j][i] * bs[l][i]))
            .collect();
        if s.iter().chain(w.iter()).any(|a| a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite())) {
            return Err(Error::NonFinite { step, t });
        }
        let mut out = self.zero();
        let [n0, n1, n2, m0, m1, m2] = &mut out;
        let i = Complex64::i();
        Zip::indexed(n0).and(n1).and(n2).par_for_each(|(a, bb, c), x, y, z| {
            let k = grid.wavevector(a, bb, c);
            let sv = |j: usize, l: usize| s[sym_index(j, l)][[a, bb, c]];
            let f: [Complex64; 3] =
                std::array::from_fn(|j| -i * (k[0] * sv(j, 0) + k[1] * sv(j, 1) + k[2] * sv(j, 2)));
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            let dot = if k2 > 0.0 { (f[0] * k[0] + f[1] * k[1] + f[2] * k[2]) / k2 } else { Complex64::new(0.0, 0.0) };
            *x = f[0] - dot * k[0];
            *y = f[1] - dot * k[1];
            *z = f[2] - dot * k[2];
        });
        Zip::indexed(m0).and(m1).and(m2).par_for_each(|(a, bb, c), x, y, z| {
            let k = grid.wavevector(a, bb, c);
            let w01 = w[0][[a, bb, c]];
            let w02 = w[1][[a, bb, c]];
            let w12 = w[2][[a, bb, c]];
            // row j of −i k_l W_jl with W antisymmetric
            *x = -i * (k[1] * w01 + k[2] * w02);
            *y = -i * (-k[0] * w01 + k[2] * w12);
            *z = -i * (-k[0] * w02 - k[1] * w12);
        });
        Ok(Evaluation { n: out, max_speed })
    }
}

/// Right-hand side (du/dt, dB/dt) including the diffusion terms.
pub fn rhs(kind: SystemKind, state: &MhdState) -> Result<(VectorField, VectorField)> {
    let grid = state.grid();
    let (u, b) = (state.u.spectral(), state.b.spectral());
    let v = split(&u, &b);
    let nl = Nonlinear { grid, dealias: DEALIAS_TWO_THIRDS, enabled: true };
    let mut n = nl.eval(&v, 0, state.t)?.n;
    for (c, x) in n.iter_mut().enumerate() {
        let p = if c < 3 { kind.velocity_propagator() } else { kind.magnetic_propagator() };
        Zip::indexed(x).and(&v[c]).par_for_each(|(i, j, l), o, s| {
            *o -= s * p.rate(grid.wavevector(i, j, l));
        });
    }
    let (du, db) = join(grid, n);
    Ok((du.to_real(), db.to_real()))
}

fn phi1(a: f64) -> f64 {
    if a.abs() < 1e-4 {
        1.0 - a / 2.0 + a * a / 6.0
    } else {
        -(-a).exp_m1() / a
    }
}

fn phi2(a: f64) -> f64 {
    if a.abs() < 1e-3 {
        0.5 - a / 6.0 + a * a / 24.0
    } else {
        ((-a).exp() - 1.0 + a) / (a * a)
    }
}

struct EtdCoeffs {
    e: Decay,
    p1: [Array3<f64>; 2],
    p2: [Array3<f64>; 2],
}

impl EtdCoeffs {
    fn new(grid: &Grid, kind: SystemKind, h: f64) -> EtdCoeffs {
        let build = |p: PropagatorKind, f: fn(f64) -> f64| {
            let mut a = Array3::<f64>::zeros(grid.spectral_shape());
            Zip::indexed(&mut a).par_for_each(|(i, j, l), v| *v = f(h * p.rate(grid.wavevector(i, j, l))));
            a
        };
        let (pu, pb) = (kind.velocity_propagator(), kind.magnetic_propagator());
        EtdCoeffs {
            e: Decay::new(grid, kind, h),
            p1: [build(pu, phi1), build(pb, phi1)],
            p2: [build(pu, phi2), build(pb, phi2)],
        }
    }
}

struct Stepper<'g> {
    grid: &'g Arc<Grid>,
    kind: SystemKind,
    integrator: Integrator,
    nl: Nonlinear<'g>,
    half: Option<(f64, Decay)>,
    etd: Option<(f64, EtdCoeffs)>,
    previous: Option<(f64, State6)>,
}

impl Stepper<'_> {
    fn decay_half(&mut self, h: f64) -> &Decay {
        if self.half.as_ref().map(|(x, _)| *x != h).unwrap_or(true) {
            self.half = Some((h, Decay::new(self.grid, self.kind, h / 2.0)));
        }
        &self.half.as_ref().expect("just set").1
    }

    fn etd_coeffs(&mut self, h: f64) -> &EtdCoeffs {
        if self.etd.as_ref().map(|(x, _)| *x != h).unwrap_or(true) {
            self.etd = Some((h, EtdCoeffs::new(self.grid, self.kind, h)));
        }
        &self.etd.as_ref().expect("just set").1
    }

    /// One step of size h from a state whose nonlinear term `k1` is known.
    fn step(&mut self, v: &State6, k1: &State6, h: f64, step: usize, t: f64) -> Result<State6> {
        match self.integrator {
            Integrator::Ifrk4 => self.ifrk4(v, k1, h, step, t),
            Integrator::Etd2 => Ok(self.etd2(v, k1, h)),
        }
    }

    fn ifrk4(&mut self, v: &State6, k1: &State6, h: f64, step: usize, t: f64) -> Result<State6> {
        let e = {
            let d = self.decay_half(h);
            Decay { u: d.u.clone(), b: d.b.clone() }
        };
        let hh = h / 2.0;
        let v2: State6 = std::array::from_fn(|c| {
            Zip::from(&v[c]).and(&k1[c]).and(e.factor(c)).par_map_collect(|a, k, f| (a + k * hh) * *f)
        });
        let k2 = self.nl.eval(&v2, step, t + hh)?.n;
        let v3: State6 = std::array::from_fn(|c| {
            Zip::from(&v[c]).and(&k2[c]).and(e.factor(c)).par_map_collect(|a, k, f| a * *f + k * hh)
        });
        let k3 = self.nl.eval(&v3, step, t + hh)?.n;
        let v4: State6 = std::array::from_fn(|c| {
            Zip::from(&v[c]).and(&k3[c]).and(e.factor(c)).par_map_collect(|a, k, f| a * (f * f) + k * (h * f))
        });
        let k4 = self.nl.eval(&v4, step, t + h)?.n;
        let mut out = v.clone();
        for (c, o) in out.iter_mut().enumerate() {
            Zip::from(o)
                .and(&k1[c])
                .and(&k2[c])
                .and(&k3[c])
                .and(&k4[c])
                .and(e.factor(c))
                .par_for_each(|a, n1, n2, n3, n4, f| {
                    let f2 = f * f;
                    *a = *a * f2 + (n1 * f2 + (n2 + n3) * (2.0 * f) + n4) * (h / 6.0);
                });
        }
        Ok(out)
    }

    fn etd2(&mut self, v: &State6, k1: &State6, h: f64) -> State6 {
        let prev = self.previous.take().filter(|(x, _)| *x == h);
        let (e, p1, p2) = {
            let c = self.etd_coeffs(h);
            (Decay { u: c.e.u.clone(), b: c.e.b.clone() }, c.p1.clone(), c.p2.clone())
        };
        let mut out = v.clone();
        for (c, x) in out.iter_mut().enumerate() {
            let w = usize::from(c >= 3);
            match &prev {
                Some((_, old)) => Zip::from(x)
                    .and(&k1[c])
                    .and(&old[c])
                    .and(e.factor(c))
                    .and(&p1[w])
                    .and(&p2[w])
                    .par_for_each(|a, n, o, f, q1, q2| *a = *a * *f + (n * *q1 + (n - o) * *q2) * h),
                None => Zip::from(x)
                    .and(&k1[c])
                    .and(e.factor(c))
                    .and(&p1[w])
                    .par_for_each(|a, n, f, q1| *a = *a * *f + n * (*q1 * h)),
            }
        }
        self.previous = Some((h, k1.clone()));
        out
    }
}

/// Σ over modes of 2λ ∫ |v̂|² across one step, with |v̂|² interpolated exponentially.
fn step_dissipation(grid: &Grid, kind: SystemKind, old: &State6, new: &State6, h: f64) -> f64 {
    let npts = grid.len() as f64;
    let mut total = 0.0;
    for c in 0..6 {
        let p = if c < 3 { kind.velocity_propagator() } else { kind.magnetic_propagator() };
        let s = Zip::indexed(&old[c]).and(&new[c]).par_fold(
            || 0.0,
            |acc, (i, j, l), a, b| {
                let lam = p.rate(grid.wavevector(i, j, l));
                if lam == 0.0 {
                    return acc;
                }
                let (x, y) = (a.norm_sqr(), b.norm_sqr());
                acc + grid.multiplicity(l) * 2.0 * lam * h * log_mean(x, y)
            },
            |a, b| a + b,
        );
        total += s;
    }
    total * grid.volume() / (npts * npts)
}

fn log_mean(x: f64, y: f64) -> f64 {
    if x <= 0.0 || y <= 0.0 {
        return 0.5 * (x + y);
    }
    let r = y / x;
    if (r - 1.0).abs() < 1e-6 {
        let d = r - 1.0;
        x * (1.0 + d / 2.0 - d * d / 12.0)
    } else {
        (x - y) / (x / y).ln()
    }
}

fn energy6(grid: &Grid, v: &State6) -> f64 {
    v.iter().map(|s| spectral_l2_squared(grid, s)).sum()
}

fn divergence6(grid: &Arc<Grid>, u: &SpectralVector, b: &SpectralVector, state: &MhdState) -> f64 {
    let r = |s: &SpectralVector, f: &VectorField| {
        let amp = f.max_abs();
        if amp == 0.0 {
            return 0.0;
        }
        let d = crate::field::inverse(grid, s.divergence().view());
        d.iter().fold(0.0_f64, |m, x| m.max(x.abs())) / amp
    };
    r(u, &state.u).max(r(b, &state.b))
}

/// Integrate `init` to `cfg.t_end`, sampling every `cfg.stride` steps.
pub fn run(
    kind: SystemKind,
    init: &MhdState,
    cfg: &SolverConfig,
    observers: &[ObserverSpec],
    hooks: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let nsteps = cfg.steps()?;
    let grid = init.grid().clone();
    if !init.b.grid().same_shape(&grid) {
        return Err(Error::GridMismatch);
    }
    if !init.u.is_finite() || !init.b.is_finite() {
        return Err(Error::NonFinite { step: 0, t: init.t });
    }
    let (u0, b0) = (init.u.spectral(), init.b.spectral());
    let mut v = split(&u0, &b0);
    let mut stepper = Stepper {
        grid: &grid,
        kind,
        integrator: cfg.integrator,
        nl: Nonlinear { grid: &grid, dealias: cfg.dealias, enabled: cfg.nonlinear },
        half: None,
        etd: None,
        previous: None,
    };
    let needs_products = hooks.iter().any(|h| h.needs_products());
    let mut traj = Trajectory {
        kind,
        config: cfg.clone(),
        initial: MhdState { u: init.u.clone(), b: init.b.clone(), t: 0.0 },
        final_state: MhdState::zeros(&grid),
        times: Vec::new(),
        snapshots: Vec::new(),
        energy: Vec::new(),
        dissipation: Vec::new(),
        divergence: Vec::new(),
        series: observers
            .iter()
            .map(|o| NormSeries::new(o.label(), o.p, o.q, o.alpha))
            .collect(),
        halvings: 0,
    };
    let mut dissipated = 0.0;
    let mut record = |traj: &mut Trajectory, v: &State6, step: usize, t: f64, dissipated: f64| -> Result<MhdState> {
        let (u, b) = join(&grid, v.clone());
        let state = MhdState { u: u.to_real(), b: b.to_real(), t };
        traj.times.push(t);
        traj.energy.push(energy6(&grid, v));
        traj.dissipation.push(dissipated);
        traj.divergence.push(divergence6(&grid, &u, &b, &state));
        for (o, s) in observers.iter().zip(traj.series.iter_mut()) {
            s.push(t, o.measure(&u, &b, &state));
        }
        let products = if needs_products { Some(Products::compute(&state.u, &state.b, cfg.dealias)) } else { None };
        let sample = Sample { kind, step, t, state: &state, u_hat: &u, b_hat: &b, products: products.as_ref() };
        for h in hooks.iter_mut() {
            h.observe(&sample)?;
        }
        if cfg.store_snapshots {
            traj.snapshots.push(state.clone());
        }
        Ok(state)
    };
    let mut last = record(&mut traj, &v, 0, 0.0, 0.0)?;
    let h_min = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    for step in 1..=nsteps {
        let t0 = (step - 1) as f64 * cfg.dt;
        let first = stepper.nl.eval(&v, step, t0)?;
        let limit = CFL_NUMBER * h_min / first.max_speed.max(f64::MIN_POSITIVE);
        let mut halvings = 0;
        while cfg.dt / f64::from(1u32 << halvings) > limit {
            halvings += 1;
            if halvings > MAX_STEP_HALVINGS {
                return Err(Error::CflAbort { t: t0, halvings: MAX_STEP_HALVINGS });
            }
        }
        traj.halvings += halvings as usize;
        let sub = 1usize << halvings;
        let h = cfg.dt / sub as f64;
        let mut k1 = first.n;
        for s in 0..sub {
            let ts = t0 + s as f64 * h;
            if s > 0 {
                k1 = stepper.nl.eval(&v, step, ts)?.n;
            }
            let next = stepper.step(&v, &k1, h, step, ts)?;
            dissipated += step_dissipation(&grid, kind, &v, &next, h);
            v = next;
        }
        if v.iter().any(|a| a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite())) {
            return Err(Error::NonFinite { step, t: t0 + cfg.dt });
        }
        if step % MAGNETIC_REPROJECT_INTERVAL == 0 {
            let (u, mut b) = join(&grid, v);
            b.project();
            v = split(&u, &b);
        }
        if step % cfg.stride == 0 || step == nsteps {
            last = record(&mut traj, &v, step, step as f64 * cfg.dt, dissipated)?;
        }
    }
    traj.final_state = last;
    Ok(traj)
}

/// residual(t) = E(t) + ∫₀^t D − E(0) at the sample times.
pub fn energy_balance(traj: &Trajectory) -> Vec<(f64, f64)> {
    let e0 = traj.energy.first().cloned().unwrap_or(0.0);
    traj.times
        .iter()
        .zip(traj.energy.iter().zip(traj.dissipation.iter()))
        .map(|(&t, (&e, &d))| (t, e + d - e0))
        .collect()
}
