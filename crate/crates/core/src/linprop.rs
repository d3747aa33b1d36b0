//! Exact spectral propagators e^{tΔ} and e^{tΔ_h} and linear decay experiments.

use ndarray::Zip;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::{SpectralVector, VectorField};
use crate::fit::NormSeries;
use crate::grid::DerivativeIndex;
use crate::norms::{aniso_norm, Components};
use crate::tolerances::LOCALIZATION_TOLERANCE;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagatorKind {
    FullHeat,
    HorizHeat,
}

impl PropagatorKind {
    /// Decay rate λ(k) with symbol e^{-tλ(k)}.
    #[inline]
    pub fn rate(self, k: [f64; 3]) -> f64 {
        match self {
            PropagatorKind::FullHeat => k[0] * k[0] + k[1] * k[1] + k[2] * k[2],
            PropagatorKind::HorizHeat => k[0] * k[0] + k[1] * k[1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PropagatorKind::FullHeat => "full",
            PropagatorKind::HorizHeat => "horizontal",
        }
    }
}

/// Multiply a spectrum by e^{-tλ(k)} in place.
pub fn apply_semigroup_spectral(kind: PropagatorKind, s: &mut SpectralVector, t: f64) {
    if t == 0.0 {
        return;
    }
    let grid = s.grid().clone();
    for c in s.components_mut().iter_mut() {
        Zip::indexed(c).par_for_each(|(i, j, l), v| {
            *v *= (-t * kind.rate(grid.wavevector(i, j, l))).exp();
        });
    }
}

pub fn apply_semigroup(kind: PropagatorKind, f: &VectorField, t: f64) -> Result<VectorField> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("semigroup time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(f.clone());
    }
    let mut s = f.spectral();
    apply_semigroup_spectral(kind, &mut s, t);
    Ok(s.to_real())
}

/// Fraction of the L¹ mass of |f| outside the middle half of the box.
pub fn mass_outside_middle(f: &VectorField) -> f64 {
    let g = f.grid();
    let mag = f.magnitude(&[0, 1, 2]);
    let l = g.lengths();
    let (mut inside, mut total) = (0.0, 0.0);
    for ((i, j, k), v) in mag.indexed_iter() {
        total += v;
        let x = [g.centered_coord(0, i), g.centered_coord(1, j), g.centered_coord(2, k)];
        if (0..3).all(|a| x[a].abs() <= l[a] / 4.0) {
            inside += v;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (total - inside) / total
    }
}

/// Norm series of e^{tL} f₀ over `t_samples` for each (p, q) in `pq`.
pub fn linear_decay_experiment(
    kind: PropagatorKind,
    f0: &VectorField,
    components: Components,
    pq: &[(f64, f64)],
    t_samples: &[f64],
) -> Result<Vec<NormSeries>> {
    let grid = f0.grid().clone();
    let limit = grid.window_limit();
    if let Some(&t) = t_samples.iter().find(|&&t| t > limit) {
        return Err(Error::WindowTooLong { t, limit });
    }
    if t_samples.windows(2).any(|w| w[1] <= w[0]) || t_samples.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("time samples must be non-negative and increasing".into()));
    }
    let outside = mass_outside_middle(f0);
    if outside > LOCALIZATION_TOLERANCE {
        return Err(Error::InvalidArgument(format!(
            "initial data not localized: {outside:.2e} of its mass lies outside the middle half of the box"
        )));
    }
    let s0 = f0.spectral();
    let idx = components.indices();
    let rows: Vec<Vec<f64>> = t_samples
        .par_iter()
        .map(|&t| {
            let mut s = s0.clone();
            apply_semigroup_spectral(kind, &mut s, t);
            let f = s.to_real();
            let mag = f.magnitude(idx);
            pq.iter().map(|&(p, q)| aniso_norm(&grid, mag.view(), p, q)).collect()
        })
        .collect();
    let mut out: Vec<NormSeries> = pq
        .iter()
        .map(|&(p, q)| NormSeries::new(format!("{}-heat{}", kind.name(), components.suffix()), p, q, DerivativeIndex::ZERO))
        .collect();
    for (t, row) in t_samples.iter().zip(rows) {
        for (s, v) in out.iter_mut().zip(row) {
            s.push(*t, v);
        }
    }
    Ok(out)
}

/// Symbol e^{-tλ} as a complex multiplier.
pub fn symbol(kind: PropagatorKind, t: f64, k: [f64; 3]) -> Complex64 {
    Complex64::new((-t * kind.rate(k)).exp(), 0.0)
}
