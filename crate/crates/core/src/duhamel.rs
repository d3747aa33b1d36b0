//! Duhamel decomposition of the nonlinear terms and profile integrals.
//!
//! Every term has the form M(k) Q_p(t, k) with a time-independent multiplier M
//! and Q_p(t) = ∫₀ᵗ e^{-(t-τ)λ(k)} p̂(τ) dτ for a quadratic product p. The
//! integrals Q_p are accumulated by product integration over piecewise-linear
//! interpolants of the sampled products, so the exponential factor is exact.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array3, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::field::{MhdState, SpectralVector, Spectrum, VectorField};
use crate::fit::loglog_fit;
use crate::grid::Grid;
use crate::linprop::{apply_semigroup_spectral, PropagatorKind};
use crate::norms::Components;
use crate::tolerances::{MIN_DUHAMEL_SNAPSHOTS as MIN_SNAPSHOTS, TAIL_REFUSE, TAIL_WARN};
use crate::solver::{sym_index, FieldId, Observer, Products, Sample, SystemKind, Trajectory};
use crate::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermFamily {
    /// Velocity terms of system A, horizontal components.
    Uh,
    Uv,
    /// Magnetic terms of system A.
    Bh,
    Bv,
    /// Velocity terms of system B.
    Eh,
    Ev,
    /// Magnetic terms of system B.
    Dh,
    Dv,
}

impl TermFamily {
    pub fn system(self) -> SystemKind {
        match self {
            TermFamily::Uh | TermFamily::Uv | TermFamily::Bh | TermFamily::Bv => SystemKind::A,
            _ => SystemKind::B,
        }
    }

    pub fn field(self) -> FieldId {
        match self {
            TermFamily::Uh | TermFamily::Uv | TermFamily::Eh | TermFamily::Ev => FieldId::Velocity,
            _ => FieldId::Magnetic,
        }
    }

    pub fn components(self) -> Components {
        match self {
            TermFamily::Uh | TermFamily::Bh | TermFamily::Eh | TermFamily::Dh => Components::Horizontal,
            _ => Components::Vertical,
        }
    }

    /// Number of terms in the family.
    pub fn len(self) -> u8 {
        match self {
            TermFamily::Uh | TermFamily::Eh | TermFamily::Ev => 5,
            TermFamily::Uv | TermFamily::Bh | TermFamily::Bv => 3,
            TermFamily::Dh => 4,
            TermFamily::Dv => 2,
        }
    }

    fn letter(self) -> &'static str {
        match self {
            TermFamily::Uh | TermFamily::Uv => "U",
            TermFamily::Bh | TermFamily::Bv => "B",
            TermFamily::Eh | TermFamily::Ev => "E",
            TermFamily::Dh | TermFamily::Dv => "D",
        }
    }

    fn families(system: SystemKind) -> [TermFamily; 4] {
        match system {
            SystemKind::A => [TermFamily::Uh, TermFamily::Uv, TermFamily::Bh, TermFamily::Bv],
            SystemKind::B => [TermFamily::Eh, TermFamily::Ev, TermFamily::Dh, TermFamily::Dv],
        }
    }
}

/// Which quadratic product a term acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermArgument {
    /// u ⊗ u.
    Velocity,
    /// B ⊗ B.
    Magnetic,
    /// Mixed products of B and u.
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DuhamelTermId {
    pub family: TermFamily,
    /// 1-based index within the family.
    pub index: u8,
    pub argument: TermArgument,
}

impl DuhamelTermId {
    pub fn new(family: TermFamily, index: u8, argument: TermArgument) -> Result<Self> {
        let id = DuhamelTermId { family, index, argument };
        id.validate()?;
        Ok(id)
    }

    pub fn system(&self) -> SystemKind {
        self.family.system()
    }

    pub fn validate(&self) -> Result<()> {
        if self.index == 0 || self.index > self.family.len() {
            return Err(Error::InvalidArgument(format!("{self}: index out of range 1..={}", self.family.len())));
        }
        let mixed = self.family.field() == FieldId::Magnetic;
        if mixed != (self.argument == TermArgument::Mixed) {
            return Err(Error::InvalidArgument(format!("{self}: argument does not match the family")));
        }
        Ok(())
    }

    /// Sign with which the term enters the reconstruction.
    pub fn sign(&self) -> f64 {
        if self.argument == TermArgument::Magnetic {
            -1.0
        } else {
            1.0
        }
    }

    /// Multiplier applied to the integrated products at wavevector k, output component j.
    fn value(&self, j: usize, k: [f64; 3], q: &QView<'_>) -> Complex64 {
        let s = |a: usize, b: usize| match self.argument {
            TermArgument::Velocity => q.uu(a, b),
            _ => q.bb(a, b),
        };
        let bu = |a: usize, b: usize| q.bu(a, b);
        let ub = |a: usize, b: usize| q.bu(b, a);
        let (k1, k2, k3) = (k[0], k[1], k[2]);
        let kh2 = k1 * k1 + k2 * k2;
        let kk = kh2 + k3 * k3;
        let inv = if kk > 0.0 { 1.0 / kk } else { 0.0 };
        let kj = k[j];
        // Σ_{a,b horizontal} k_a k_b S_ab and Σ_a k_a S_a3
        let hh = || k1 * k1 * s(0, 0) + 2.0 * k1 * k2 * s(0, 1) + k2 * k2 * s(1, 1);
        let h3 = || k1 * s(0, 2) + k2 * s(1, 2);
        use TermFamily::*;
        match (self.family, self.index) {
            (Uh, 1) | (Eh, 1) => -I * k3 * s(j, 2),
            (Uh, 2) | (Eh, 2) => -I * (k1 * s(j, 0) + k2 * s(j, 1)),
            (Uh, 3) => I * kj * s(2, 2),
            (Uh, 4) => I * kj * hh() * inv,
            (Uh, 5) => 2.0 * I * kj * k3 * h3() * inv - I * kj * kh2 * s(2, 2) * inv,
            (Uv, 1) => I * h3(),
            (Uv, 2) => I * k3 * hh() * inv,
            (Uv, 3) => -2.0 * I * kh2 * h3() * inv - I * k3 * kh2 * s(2, 2) * inv,
            (Eh, 3) => I * kj * hh() * inv,
            (Eh, 4) => 2.0 * I * kj * k3 * h3() * inv,
            (Eh, 5) => I * kj * k3 * k3 * s(2, 2) * inv,
            (Ev, 1) => -I * h3(),
            (Ev, 2) => -I * k3 * s(2, 2),
            (Ev, 3) => I * k3 * hh() * inv,
            (Ev, 4) => 2.0 * I * k3 * k3 * h3() * inv,
            (Ev, 5) => I * k3 * k3 * k3 * s(2, 2) * inv,
            (Bh, 1) => -I * (k1 * bu(j, 0) + k2 * bu(j, 1) + k3 * bu(j, 2)),
            (Bh, 2) | (Dh, 2) => I * (k1 * ub(j, 0) + k2 * ub(j, 1)),
            (Bh, 3) | (Dh, 4) => I * k3 * bu(2, j),
            (Bv, 1) => -I * (k1 * bu(2, 0) + k2 * bu(2, 1) + k3 * bu(2, 2)),
            (Bv, 2) | (Dv, 2) => I * (k1 * ub(2, 0) + k2 * ub(2, 1)),
            (Bv, 3) => I * k3 * ub(2, 2),
            (Dh, 1) => -I * (k1 * bu(j, 0) + k2 * bu(j, 1)),
            (Dh, 3) => -I * k3 * bu(j, 2),
            (Dv, 1) => -I * (k1 * bu(2, 0) + k2 * bu(2, 1)),
            _ => ZERO,
        }
    }
}

impl fmt::Display for DuhamelTermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.family.components() {
            Components::Horizontal => "h",
            _ => "v",
        };
        let arg = match self.argument {
            TermArgument::Velocity => "[u]",
            TermArgument::Magnetic => "[B]",
            TermArgument::Mixed => "",
        };
        write!(f, "{}:{}{}{}{}", self.system(), self.family.letter(), side, self.index, arg)
    }
}

/// All terms of a system, velocity families first.
pub fn all_terms(system: SystemKind) -> Vec<DuhamelTermId> {
    let mut out = Vec::new();
    for family in TermFamily::families(system) {
        let args: &[TermArgument] = if family.field() == FieldId::Velocity {
            &[TermArgument::Velocity, TermArgument::Magnetic]
        } else {
            &[TermArgument::Mixed]
        };
        for index in 1..=family.len() {
            for &argument in args {
                out.push(DuhamelTermId { family, index, argument });
            }
        }
    }
    out
}

/// Which product groups to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductGroups {
    pub uu: bool,
    pub bb: bool,
    pub bu: bool,
}

impl ProductGroups {
    pub const ALL: ProductGroups = ProductGroups { uu: true, bb: true, bu: true };

    pub fn for_terms(ids: &[DuhamelTermId]) -> Self {
        ProductGroups {
            uu: ids.iter().any(|i| i.argument == TermArgument::Velocity),
            bb: ids.iter().any(|i| i.argument == TermArgument::Magnetic),
            bu: ids.iter().any(|i| i.argument == TermArgument::Mixed),
        }
    }

    fn covers(&self, id: &DuhamelTermId) -> bool {
        match id.argument {
            TermArgument::Velocity => self.uu,
            TermArgument::Magnetic => self.bb,
            TermArgument::Mixed => self.bu,
        }
    }
}

/// Read access to integrated products at one mode.
struct QView<'a> {
    q: &'a Products,
    idx: (usize, usize, usize),
}

impl QView<'_> {
    fn uu(&self, a: usize, b: usize) -> Complex64 {
        self.q.uu[sym_index(a, b)][self.idx]
    }
    fn bb(&self, a: usize, b: usize) -> Complex64 {
        self.q.bb[sym_index(a, b)][self.idx]
    }
    /// ∫ B_a u_b.
    fn bu(&self, a: usize, b: usize) -> Complex64 {
        self.q.bu[3 * a + b][self.idx]
    }
}

fn phi_weights(alpha: f64) -> (f64, f64) {
    if alpha < 0.05 {
        // φ₁ = Σ (-α)ⁿ/(n+1)!, φ₂ = Σ (-α)ⁿ/(n+2)!
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut term = 1.0;
        for n in 0..10 {
            term /= (n + 1) as f64;
            p1 += term;
            p2 += term / (n + 2) as f64;
            term *= -alpha;
        }
        (p1 - p2, p2)
    } else {
        let e = (-alpha).exp();
        let a2 = alpha * alpha;
        ((1.0 - (1.0 + alpha) * e) / a2, (alpha - 1.0 + e) / a2)
    }
}

/// Exact one-interval weights for a linear interpolant under e^{-(t-τ)λ}.
struct Weights {
    h: f64,
    decay: Array3<f64>,
    left: Array3<f64>,
    right: Array3<f64>,
}

impl Weights {
    fn new(grid: &Grid, kind: PropagatorKind, h: f64) -> Self {
        let shape = grid.spectral_shape();
        let mut decay = Array3::zeros(shape);
        let mut left = Array3::zeros(shape);
        let mut right = Array3::zeros(shape);
        Zip::indexed(&mut decay).and(&mut left).and(&mut right).par_for_each(|(i, j, l), e, a, b| {
            let alpha = kind.rate(grid.wavevector(i, j, l)) * h;
            let (pa, pb) = phi_weights(alpha);
            *e = (-alpha).exp();
            *a = h * pa;
            *b = h * pb;
        });
        Weights { h, decay, left, right }
    }

    fn update(&self, q: &mut Spectrum, prev: &Spectrum, next: &Spectrum) {
        Zip::from(q)
            .and(prev)
            .and(next)
            .and(&self.decay)
            .and(&self.left)
            .and(&self.right)
            .par_for_each(|q, p, n, e, a, b| *q = *e * *q + *a * *p + *b * *n);
    }
}

fn empty_products(grid: &Grid, groups: ProductGroups) -> Products {
    let z = || Spectrum::zeros(grid.spectral_shape());
    let n = |on: bool, k: usize| if on { (0..k).map(|_| z()).collect() } else { Vec::new() };
    Products { uu: n(groups.uu, 6), bb: n(groups.bb, 6), bu: n(groups.bu, 9) }
}

fn select(p: &Products, groups: ProductGroups) -> Products {
    let pick = |on: bool, v: &Vec<Spectrum>| if on { v.clone() } else { Vec::new() };
    Products { uu: pick(groups.uu, &p.uu), bb: pick(groups.bb, &p.bb), bu: pick(groups.bu, &p.bu) }
}

struct Stage {
    q: Products,
    velocity: Option<Weights>,
    magnetic: Option<Weights>,
}

impl Stage {
    fn update(&mut self, grid: &Grid, kind: SystemKind, h: f64, prev: &Products, next: &Products) {
        let refresh = |w: &mut Option<Weights>, pk: PropagatorKind| {
            if w.as_ref().map_or(true, |w| (w.h - h).abs() > 1e-12 * h) {
                *w = Some(Weights::new(grid, pk, h));
            }
        };
        refresh(&mut self.velocity, kind.velocity_propagator());
        refresh(&mut self.magnetic, kind.magnetic_propagator());
        let wv = self.velocity.as_ref().expect("weights set");
        let wm = self.magnetic.as_ref().expect("weights set");
        for (n, q) in self.q.uu.iter_mut().enumerate() {
            wv.update(q, &prev.uu[n], &next.uu[n]);
        }
        for (n, q) in self.q.bb.iter_mut().enumerate() {
            wv.update(q, &prev.bb[n], &next.bb[n]);
        }
        for (n, q) in self.q.bu.iter_mut().enumerate() {
            wm.update(q, &prev.bu[n], &next.bu[n]);
        }
    }
}

/// Running Q_p(t) at the sample spacing, with a second copy at twice the
/// spacing for a Richardson error estimate.
pub struct DuhamelAccumulator {
    kind: SystemKind,
    grid: Arc<Grid>,
    groups: ProductGroups,
    fine: Stage,
    coarse: Stage,
    coarse_valid: bool,
    prev: Option<Products>,
    prev_even: Option<Products>,
    count: usize,
    t: f64,
    h: Option<f64>,
}

impl DuhamelAccumulator {
    pub fn new(kind: SystemKind, grid: &Arc<Grid>, groups: ProductGroups) -> Self {
        let stage = || Stage { q: empty_products(grid, groups), velocity: None, magnetic: None };
        DuhamelAccumulator {
            kind,
            grid: grid.clone(),
            groups,
            fine: stage(),
            coarse: stage(),
            coarse_valid: true,
            prev: None,
            prev_even: None,
            count: 0,
            t: 0.0,
            h: None,
        }
    }

    pub fn samples(&self) -> usize {
        self.count
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Add the products sampled at time t; samples must start at 0.
    pub fn push(&mut self, t: f64, products: &Products) -> Result<()> {
        let next = select(products, self.groups);
        let Some(prev) = self.prev.take() else {
            if t.abs() > 1e-12 {
                return Err(Error::Snapshots(format!("product samples must start at t = 0, got {t}")));
            }
            self.prev_even = Some(next.clone());
            self.prev = Some(next);
            self.count = 1;
            return Ok(());
        };
        let h = t - self.t;
        if !(h > 0.0) {
            return Err(Error::Snapshots(format!("sample times must increase ({} then {t})", self.t)));
        }
        if let Some(h0) = self.h {
            if (h - h0).abs() > 1e-9 * h0 {
                self.coarse_valid = false;
            }
        }
        self.h = Some(h);
        self.fine.update(&self.grid, self.kind, h, &prev, &next);
        if self.count % 2 == 0 && self.coarse_valid {
            let pe = self.prev_even.take().expect("even sample kept");
            self.coarse.update(&self.grid, self.kind, 2.0 * h, &pe, &next);
        }
        if self.count % 2 == 0 {
            self.prev_even = Some(next.clone());
        }
        self.prev = Some(next);
        self.count += 1;
        self.t = t;
        Ok(())
    }

    /// Freeze the current integrals.
    pub fn integrals(&self) -> Result<DuhamelIntegrals> {
        if self.count < MIN_SNAPSHOTS {
            return Err(Error::Snapshots(format!(
                "{} samples in [0, {}], need at least {MIN_SNAPSHOTS}; lower the sampling stride",
                self.count, self.t
            )));
        }
        // the coarse integral reaches t only after an even number of intervals
        let coarse = if self.coarse_valid && (self.count - 1) % 2 == 0 { Some(self.coarse.q.clone()) } else { None };
        Ok(DuhamelIntegrals {
            kind: self.kind,
            grid: self.grid.clone(),
            groups: self.groups,
            t: self.t,
            q: self.fine.q.clone(),
            coarse,
        })
    }
}

/// Frozen integrals Q_p(t) for one time t.
#[derive(Clone)]
pub struct DuhamelIntegrals {
    pub kind: SystemKind,
    grid: Arc<Grid>,
    groups: ProductGroups,
    pub t: f64,
    q: Products,
    coarse: Option<Products>,
}

/// One evaluated Duhamel term.
#[derive(Clone)]
pub struct TermField {
    pub id: DuhamelTermId,
    pub t: f64,
    /// Components outside the term's family are zero.
    pub field: VectorField,
    pub components: Components,
    /// Richardson estimate of the L² quadrature error, when available.
    pub error: Option<f64>,
}

impl DuhamelIntegrals {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    fn check(&self, ids: &[DuhamelTermId]) -> Result<()> {
        for id in ids {
            id.validate()?;
            if id.system() != self.kind {
                return Err(Error::InvalidArgument(format!("{id} does not belong to system {}", self.kind)));
            }
            if !self.groups.covers(id) {
                return Err(Error::InvalidArgument(format!("products for {id} were not accumulated")));
            }
        }
        Ok(())
    }

    fn sum_spectral(&self, q: &Products, ids: &[(DuhamelTermId, f64)]) -> SpectralVector {
        let shape = self.grid.spectral_shape();
        let mut c: [Spectrum; 3] = std::array::from_fn(|_| Spectrum::zeros(shape));
        let grid = &self.grid;
        let [c0, c1, c2] = &mut c;
        Zip::indexed(c0).and(c1).and(c2).par_for_each(|idx, o0, o1, o2| {
            let k = grid.wavevector(idx.0, idx.1, idx.2);
            let view = QView { q, idx };
            for (id, w) in ids {
                if id.family.components() == Components::Horizontal {
                    *o0 += *w * id.value(0, k, &view);
                    *o1 += *w * id.value(1, k, &view);
                } else {
                    *o2 += *w * id.value(2, k, &view);
                }
            }
        });
        SpectralVector::from_components(&self.grid, c).expect("own grid")
    }

    pub fn term(&self, id: DuhamelTermId) -> Result<TermField> {
        self.check(&[id])?;
        let fine = self.sum_spectral(&self.q, &[(id, 1.0)]);
        let error = self.coarse.as_ref().map(|c| {
            let coarse = self.sum_spectral(c, &[(id, 1.0)]);
            let mut d = fine.clone();
            for (a, b) in d.components_mut().iter_mut().zip(coarse.components()) {
                *a -= b;
            }
            d.l2_squared().sqrt() / 3.0
        });
        Ok(TermField { id, t: self.t, field: fine.to_real(), components: id.family.components(), error })
    }

    /// Signed sum of the given terms, spectral.
    pub fn sum(&self, ids: &[DuhamelTermId]) -> Result<SpectralVector> {
        self.check(ids)?;
        let w: Vec<_> = ids.iter().map(|id| (*id, id.sign())).collect();
        Ok(self.sum_spectral(&self.q, &w))
    }

    /// Linear evolution of the initial data plus all terms not excluded.
    pub fn reconstruct_excluding(&self, initial: &MhdState, exclude: &[DuhamelTermId]) -> Result<MhdState> {
        if !initial.u.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch);
        }
        let terms: Vec<_> = all_terms(self.kind).into_iter().filter(|id| !exclude.contains(id)).collect();
        let (tu, tb): (Vec<_>, Vec<_>) = terms.into_iter().partition(|id| id.family.field() == FieldId::Velocity);
        let mut u = initial.u.spectral();
        apply_semigroup_spectral(self.kind.velocity_propagator(), &mut u, self.t);
        let mut b = initial.b.spectral();
        apply_semigroup_spectral(self.kind.magnetic_propagator(), &mut b, self.t);
        for (field, ids) in [(&mut u, tu), (&mut b, tb)] {
            let s = self.sum(&ids)?;
            for (a, d) in field.components_mut().iter_mut().zip(s.components()) {
                *a += d;
            }
        }
        Ok(MhdState { u: u.to_real(), b: b.to_real(), t: self.t })
    }

    pub fn reconstruct(&self, initial: &MhdState) -> Result<MhdState> {
        self.reconstruct_excluding(initial, &[])
    }
}

/// Index of t among the trajectory snapshots.
fn snapshot_index(traj: &Trajectory, t: f64) -> Result<usize> {
    if traj.snapshots.is_empty() {
        return Err(Error::Snapshots("the run stored no snapshots".into()));
    }
    let tol = 1e-9 * t.abs().max(1.0);
    let idx = traj
        .snapshots
        .iter()
        .position(|s| (s.t - t).abs() <= tol)
        .ok_or_else(|| Error::Snapshots(format!("t = {t} is not a snapshot time")))?;
    if idx + 1 < MIN_SNAPSHOTS {
        let needed = t / (MIN_SNAPSHOTS - 1) as f64;
        return Err(Error::Snapshots(format!(
            "{} snapshots in [0, {t}], need at least {MIN_SNAPSHOTS}; use a sampling interval of at most {needed}",
            idx + 1
        )));
    }
    Ok(idx)
}

/// Product integrals at snapshot time t, computed from the stored states.
pub fn integrals(traj: &Trajectory, t: f64, groups: ProductGroups) -> Result<DuhamelIntegrals> {
    let idx = snapshot_index(traj, t)?;
    let mut acc = DuhamelAccumulator::new(traj.kind, traj.grid(), groups);
    for s in &traj.snapshots[..=idx] {
        acc.push(s.t, &Products::compute(&s.u, &s.b, traj.config.dealias))?;
    }
    acc.integrals()
}

pub fn eval_term(id: DuhamelTermId, traj: &Trajectory, t: f64) -> Result<TermField> {
    integrals(traj, t, ProductGroups::for_terms(&[id]))?.term(id)
}

pub fn reconstruct(traj: &Trajectory, t: f64) -> Result<MhdState> {
    integrals(traj, t, ProductGroups::ALL)?.reconstruct(&traj.initial)
}

/// Accumulates the integrals during a run and freezes them at requested times.
pub struct DuhamelObserver {
    acc: DuhamelAccumulator,
    dealias: f64,
    at: Vec<f64>,
    pub frozen: Vec<DuhamelIntegrals>,
}

impl DuhamelObserver {
    pub fn new(kind: SystemKind, grid: &Arc<Grid>, groups: ProductGroups, dealias: f64, at: &[f64]) -> Self {
        DuhamelObserver { acc: DuhamelAccumulator::new(kind, grid, groups), dealias, at: at.to_vec(), frozen: Vec::new() }
    }
}

impl Observer for DuhamelObserver {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()> {
        match sample.products {
            Some(p) => self.acc.push(sample.t, p)?,
            None => self.acc.push(sample.t, &Products::compute(&sample.state.u, &sample.state.b, self.dealias))?,
        }
        let t = sample.t;
        if self.at.iter().any(|&a| (a - t).abs() <= 1e-9 * a.abs().max(1.0)) {
            self.frozen.push(self.acc.integrals()?);
        }
        Ok(())
    }

    fn needs_products(&self) -> bool {
        true
    }
}

/// Horizontal-plane and time integrals of quadratic quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfilePair {
    /// ∫₀^∞∫ ∂₃^d (a₃ b_h) dy_h dτ as a function of x₃, d ∈ {0, 1}.
    Line { first: FieldId, second: FieldId, vertical_derivative: bool },
    /// ∫₀^∞∫ a_i b_j dy dτ, a 3×3 matrix.
    Total { first: FieldId, second: FieldId },
}

fn combo(a: FieldId, b: FieldId) -> usize {
    let n = |f| if f == FieldId::Velocity { 0 } else { 1 };
    2 * n(a) + n(b)
}

#[derive(Clone, Debug)]
struct ProfileSample {
    t: f64,
    /// Plane sums Σ_{x_h} a₃ b_c for c = 1, 2, indexed by field combination.
    planes: [[Vec<f64>; 2]; 4],
    /// Σ_x a_i b_j.
    totals: [[[f64; 3]; 3]; 4],
}

fn profile_sample(state: &MhdState) -> ProfileSample {
    let nz = state.u.grid().n()[2];
    let fields = [&state.u, &state.b];
    let mut planes: [[Vec<f64>; 2]; 4] = std::array::from_fn(|_| [vec![0.0; nz], vec![0.0; nz]]);
    let mut totals = [[[0.0; 3]; 3]; 4];
    for (ai, a) in fields.iter().enumerate() {
        for (bi, b) in fields.iter().enumerate() {
            let cmb = 2 * ai + bi;
            for i in 0..3 {
                for j in 0..3 {
                    let (x, y) = (a.component(i), b.component(j));
                    if i == 2 && j < 2 {
                        let p = &mut planes[cmb][j];
                        Zip::indexed(x).and(y).for_each(|(_, _, l), u, v| p[l] += u * v);
                        totals[cmb][i][j] = p.iter().sum();
                    } else {
                        totals[cmb][i][j] = Zip::from(x).and(y).fold(0.0, |s, u, v| s + u * v);
                    }
                }
            }
        }
    }
    ProfileSample { t: state.t, planes, totals }
}

/// Profile integral with its tail estimate.
#[derive(Clone, Debug)]
pub struct ProfileIntegral {
    pub pair: ProfilePair,
    /// Last sample time.
    pub t_end: f64,
    /// Line pairs: DFT along x₃ of the integrated plane sums, one line per
    /// horizontal component, on k₃ = 0..nz/2.
    pub lines: Vec<Array1<Complex64>>,
    /// Total pairs: physical integrals.
    pub total: Option<[[f64; 3]; 3]>,
    /// Size of the extrapolated tail relative to the whole.
    pub tail_fraction: f64,
    pub tail_warning: bool,
    grid: Arc<Grid>,
}

impl ProfileIntegral {
    /// Physical function of x₃ for horizontal component c.
    pub fn x3_profile(&self, c: usize) -> Vec<f64> {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let nz = n[2];
        let line = &self.lines[c];
        (0..nz)
            .map(|z| {
                let mut s = 0.0;
                for (l, v) in line.iter().enumerate() {
                    let w = self.grid.multiplicity(l);
                    let ph = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (l * z) as f64 / nz as f64);
                    s += w * (v * ph).re;
                }
                s * h[0] * h[1] / nz as f64
            })
            .collect()
    }
}

/// Stores the plane sums needed for every profile integral.
pub struct ProfileAccumulator {
    grid: Arc<Grid>,
    dealias: f64,
    samples: Vec<ProfileSample>,
}

impl ProfileAccumulator {
    pub fn new(grid: &Arc<Grid>, dealias: f64) -> Self {
        ProfileAccumulator { grid: grid.clone(), dealias, samples: Vec::new() }
    }

    pub fn push(&mut self, state: &MhdState) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(state.t > last.t) {
                return Err(Error::Snapshots(format!("sample times must increase ({} then {})", last.t, state.t)));
            }
        } else if state.t.abs() > 1e-12 {
            return Err(Error::Snapshots(format!("profile samples must start at t = 0, got {}", state.t)));
        }
        self.samples.push(profile_sample(state));
        Ok(())
    }

    pub fn integral(&self, pair: ProfilePair) -> Result<ProfileIntegral> {
        if self.samples.len() < MIN_SNAPSHOTS {
            return Err(Error::Snapshots(format!(
                "{} samples, need at least {MIN_SNAPSHOTS} for a profile integral",
                self.samples.len()
            )));
        }
        // flatten each sample to a vector so lines and matrices share one path
        let flat: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| match pair {
                ProfilePair::Line { first, second, .. } => {
                    let p = &s.planes[combo(first, second)];
                    p[0].iter().chain(p[1].iter()).copied().collect()
                }
                ProfilePair::Total { first, second } => {
                    s.totals[combo(first, second)].iter().flatten().copied().collect()
                }
            })
            .collect();
        let times: Vec<f64> = self.samples.iter().map(|s| s.t).collect();
        let mut acc = vec![0.0; flat[0].len()];
        for w in 0..times.len() - 1 {
            let dt = times[w + 1] - times[w];
            for (a, (x, y)) in acc.iter_mut().zip(flat[w].iter().zip(&flat[w + 1])) {
                *a += 0.5 * dt * (x + y);
            }
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let t_end = *times.last().expect("samples present");
        let last = flat.last().expect("samples present");
        let mut tail_fraction = 0.0;
        if norm(last) > 0.0 {
            let (ts, ns): (Vec<f64>, Vec<f64>) = times
                .iter()
                .zip(&flat)
                .filter(|(t, _)| **t >= t_end / 10.0)
                .map(|(t, v)| (*t, norm(v)))
                .unzip();
            let fit = loglog_fit(&ts, &ns)?;
            let a = -fit.exponent;
            if a <= 1.0 {
                return Err(Error::TailTooLarge { fraction: f64::INFINITY });
            }
            let scale = t_end / (a - 1.0);
            let tail: Vec<f64> = last.iter().map(|x| x * scale).collect();
            for (x, y) in acc.iter_mut().zip(&tail) {
                *x += y;
            }
            let whole = norm(&acc);
            tail_fraction = if whole > 0.0 { norm(&tail) / whole } else { f64::INFINITY };
            if tail_fraction > TAIL_REFUSE {
                return Err(Error::TailTooLarge { fraction: tail_fraction });
            }
        }
        let tail_warning = tail_fraction > TAIL_WARN;
        let grid = self.grid.clone();
        match pair {
            ProfilePair::Line { vertical_derivative, .. } => {
                let nz = grid.n()[2];
                let lz = grid.lengths()[2];
                let lines = (0..2)
                    .map(|c| {
                        let m = &acc[c * nz..(c + 1) * nz];
                        Array1::from_shape_fn(nz / 2 + 1, |l| {
                            if (l as f64) >= self.dealias * nz as f64 / 2.0 {
                                return ZERO;
                            }
                            let mut s = ZERO;
                            for (z, v) in m.iter().enumerate() {
                                s += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (l * z) as f64 / nz as f64);
                            }
                            if vertical_derivative {
                                s * I * (2.0 * std::f64::consts::PI * l as f64 / lz)
                            } else {
                                s
                            }
                        })
                    })
                    .collect();
                Ok(ProfileIntegral { pair, t_end, lines, total: None, tail_fraction, tail_warning, grid })
            }
            ProfilePair::Total { .. } => {
                let w = grid.cell_volume();
                let total = std::array::from_fn(|i| std::array::from_fn(|j| acc[3 * i + j] * w));
                Ok(ProfileIntegral { pair, t_end, lines: Vec::new(), total: Some(total), tail_fraction, tail_warning, grid })
            }
        }
    }
}

impl Observer for ProfileAccumulator {
    fn observe(&mut self, sample: &Sample<'_>) -> Result<()> {
        self.push(sample.state)
    }
}

/// Profile integral over the stored snapshots of a run.
pub fn profile_integral(traj: &Trajectory, pair: ProfilePair) -> Result<ProfileIntegral> {
    if traj.snapshots.is_empty() {
        return Err(Error::Snapshots("the run stored no snapshots".into()));
    }
    let mut acc = ProfileAccumulator::new(traj.grid(), traj.config.dealias);
    for s in &traj.snapshots {
        acc.push(s)?;
    }
    acc.integral(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inventory_sizes() {
        assert_eq!(all_terms(SystemKind::A).len(), 22);
        assert_eq!(all_terms(SystemKind::B).len(), 26);
        for id in all_terms(SystemKind::A).into_iter().chain(all_terms(SystemKind::B)) {
            id.validate().unwrap();
        }
        assert!(DuhamelTermId::new(TermFamily::Dv, 3, TermArgument::Mixed).is_err());
        assert!(DuhamelTermId::new(TermFamily::Uh, 1, TermArgument::Mixed).is_err());
    }

    #[test]
    fn weights_integrate_linear_data_exactly() {
        for alpha in [1e-5, 1e-3, 0.3, 4.0, 60.0] {
            let (a, b) = phi_weights(alpha);
            // ∫₀¹ e^{-α(1-s)} ds = (1 - e^{-α})/α
            let full = if alpha < 1e-8 { 1.0 } else { (1.0 - (-alpha).exp()) / alpha };
            assert!((a + b - full).abs() < 1e-12, "{alpha}");
            // ∫₀¹ e^{-α(1-s)} s ds
            if alpha > 0.1 {
                let lin = (alpha - 1.0 + (-alpha).exp()) / (alpha * alpha);
                assert!((b - lin).abs() < 1e-12, "{alpha}");
            } else {
                assert!((b - 0.5 + alpha / 6.0).abs() < alpha * alpha, "{alpha}");
            }
        }
    }

    #[test]
    fn display_names() {
        let id = DuhamelTermId::new(TermFamily::Uh, 3, TermArgument::Magnetic).unwrap();
        assert_eq!(id.to_string(), "A:Uh3[B]");
        let id = DuhamelTermId::new(TermFamily::Dv, 2, TermArgument::Mixed).unwrap();
        assert_eq!(id.to_string(), "B:Dv2");
    }
}
