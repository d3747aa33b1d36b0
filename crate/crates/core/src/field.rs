//! Real and spectral vector fields on a [`Grid`], with spectral calculus.

use std::sync::Arc;

use ndarray::{Array3, ArrayView3, Zip};
use num_complex::Complex64;

use crate::grid::{DerivativeIndex, Grid};
use crate::{Error, Result};

pub type Spectrum = Array3<Complex64>;

/// Three real components sampled on the grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: [Array3<f64>; 3],
}

/// Half-spectrum mirror of a [`VectorField`].
#[derive(Clone, Debug)]
pub struct SpectralVector {
    grid: Arc<Grid>,
    comps: [Spectrum; 3],
}

/// Velocity and magnetic field at a time.
#[derive(Clone, Debug)]
pub struct MhdState {
    pub u: VectorField,
    pub b: VectorField,
    pub t: f64,
}

/// Transform a real scalar array on `grid`.
pub fn forward(grid: &Grid, a: ArrayView3<f64>) -> Spectrum {
    grid.fft().forward(a)
}

/// Inverse-transform a half spectrum on `grid`.
pub fn inverse(grid: &Grid, s: ArrayView3<Complex64>) -> Array3<f64> {
    grid.fft().inverse(s)
}

/// Multiply a half spectrum entrywise by `symbol(k)`, in place.
pub fn apply_symbol<F>(grid: &Grid, s: &mut Spectrum, symbol: F)
where
    F: Fn([f64; 3]) -> Complex64 + Sync,
{
    Zip::indexed(s).par_for_each(|(i, j, l), v| {
        *v *= symbol(grid.wavevector(i, j, l));
    });
}

/// Spectral ∂^α of a scalar spectrum, Nyquist planes zeroed when |α| > 0.
pub fn derivative_spectrum(grid: &Grid, s: &Spectrum, alpha: DerivativeIndex) -> Spectrum {
    let mut out = s.clone();
    if alpha.is_zero() {
        return out;
    }
    Zip::indexed(&mut out).par_for_each(|(i, j, l), v| {
        if grid.is_nyquist(i, j, l) {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= alpha.symbol(grid.wavevector(i, j, l));
        }
    });
    out
}

/// L² inner-product weight sum: (volume / N²) Σ |ŝ|² with half-spectrum multiplicity.
pub fn spectral_l2_squared(grid: &Grid, s: &Spectrum) -> f64 {
    let npts = grid.len() as f64;
    let mut acc = 0.0;
    for ((_, _, l), v) in s.indexed_iter() {
        acc += grid.multiplicity(l) * v.norm_sqr();
    }
    acc * grid.volume() / (npts * npts)
}

impl VectorField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let sh = grid.real_shape();
        VectorField { grid: grid.clone(), comps: [Array3::zeros(sh), Array3::zeros(sh), Array3::zeros(sh)] }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Array3<f64>; 3]) -> Result<Self> {
        for c in &comps {
            if c.dim() != grid.real_shape() {
                return Err(Error::GridMismatch);
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("field contains non-finite values".into()));
            }
        }
        Ok(VectorField { grid: grid.clone(), comps })
    }

    /// Sample `f(x)` at grid points, `x` measured from the box center.
    pub fn from_fn<F>(grid: &Arc<Grid>, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3],
    {
        let mut out = VectorField::zeros(grid);
        let (nx, ny, nz) = grid.real_shape();
        for i in 0..nx {
            let x = grid.centered_coord(0, i);
            for j in 0..ny {
                let y = grid.centered_coord(1, j);
                for l in 0..nz {
                    let v = f([x, y, grid.centered_coord(2, l)]);
                    for c in 0..3 {
                        out.comps[c][[i, j, l]] = v[c];
                    }
                }
            }
        }
        out
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &Array3<f64> {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut Array3<f64> {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Array3<f64>; 3] {
        &self.comps
    }

    pub fn into_components(self) -> [Array3<f64>; 3] {
        self.comps
    }

    pub fn spectral(&self) -> SpectralVector {
        let comps = [0, 1, 2].map(|c| forward(&self.grid, self.comps[c].view()));
        SpectralVector { grid: self.grid.clone(), comps }
    }

    /// Pointwise Euclidean magnitude of the selected components.
    pub fn magnitude(&self, which: &[usize]) -> Array3<f64> {
        let mut m = Array3::<f64>::zeros(self.grid.real_shape());
        for &c in which {
            Zip::from(&mut m).and(&self.comps[c]).for_each(|m, v| *m += v * v);
        }
        m.mapv_inplace(f64::sqrt);
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        VectorField { grid: self.grid.clone(), comps: self.comps.clone().map(|c| c * a) }
    }

    pub fn add(&self, other: &VectorField) -> Result<Self> {
        self.check_grid(other)?;
        Ok(VectorField {
            grid: self.grid.clone(),
            comps: [0, 1, 2].map(|c| &self.comps[c] + &other.comps[c]),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// L² norm from grid sums.
    pub fn l2(&self) -> f64 {
        let s: f64 = self.comps.iter().flat_map(|c| c.iter()).map(|v| v * v).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    fn check_grid(&self, other: &VectorField) -> Result<()> {
        if self.grid.same_shape(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

impl SpectralVector {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let sh = grid.spectral_shape();
        SpectralVector { grid: grid.clone(), comps: [Array3::zeros(sh), Array3::zeros(sh), Array3::zeros(sh)] }
    }

    pub fn from_components(grid: &Arc<Grid>, comps: [Spectrum; 3]) -> Result<Self> {
        if comps.iter().any(|c| c.dim() != grid.spectral_shape()) {
            return Err(Error::GridMismatch);
        }
        Ok(SpectralVector { grid: grid.clone(), comps })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &Spectrum {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut Spectrum {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Spectrum; 3] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Spectrum; 3] {
        &mut self.comps
    }

    pub fn to_real(&self) -> VectorField {
        let comps = [0, 1, 2].map(|c| inverse(&self.grid, self.comps[c].view()));
        VectorField { grid: self.grid.clone(), comps }
    }

    /// Multiply every component by the scalar symbol `m(k)`.
    pub fn apply<F>(&mut self, m: F)
    where
        F: Fn([f64; 3]) -> Complex64 + Sync,
    {
        for c in self.comps.iter_mut() {
            apply_symbol(&self.grid, c, &m);
        }
    }

    /// Leray projection f̂ − k(k·f̂)/|k|², mean mode untouched, in place.
    pub fn project(&mut self) {
        let grid = self.grid.clone();
        let [a, b, c] = &mut self.comps;
        Zip::indexed(a).and(b).and(c).par_for_each(|(i, j, l), a, b, c| {
            let k = grid.wavevector(i, j, l);
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                return;
            }
            let dot = (*a * k[0] + *b * k[1] + *c * k[2]) / k2;
            *a -= dot * k[0];
            *b -= dot * k[1];
            *c -= dot * k[2];
        });
    }

    /// Spectral divergence (scalar half spectrum).
    pub fn divergence(&self) -> Spectrum {
        let mut out = Array3::<Complex64>::zeros(self.grid.spectral_shape());
        let grid = &self.grid;
        Zip::indexed(&mut out)
            .and(&self.comps[0])
            .and(&self.comps[1])
            .and(&self.comps[2])
            .par_for_each(|(i, j, l), o, a, b, c| {
                if grid.is_nyquist(i, j, l) {
                    return;
                }
                let k = grid.wavevector(i, j, l);
                *o = Complex64::i() * (a * k[0] + b * k[1] + c * k[2]);
            });
        out
    }

    /// Spectral curl.
    pub fn curl(&self) -> SpectralVector {
        let d = |c: usize, axis: usize| derivative_spectrum(&self.grid, &self.comps[c], DerivativeIndex::unit(axis));
        let comps = [&d(2, 1) - &d(1, 2), &d(0, 2) - &d(2, 0), &d(1, 0) - &d(0, 1)];
        SpectralVector { grid: self.grid.clone(), comps }
    }

    pub fn l2_squared(&self) -> f64 {
        self.comps.iter().map(|c| spectral_l2_squared(&self.grid, c)).sum()
    }

    /// Squared H^s norm with weight (1 + |k|²)^s.
    pub fn sobolev_squared(&self, s: f64) -> f64 {
        let grid = &self.grid;
        let npts = grid.len() as f64;
        let mut acc = 0.0;
        for c in &self.comps {
            for ((i, j, l), v) in c.indexed_iter() {
                let k = grid.wavevector(i, j, l);
                let w = (1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).powf(s);
                acc += grid.multiplicity(l) * w * v.norm_sqr();
            }
        }
        acc * grid.volume() / (npts * npts)
    }
}

/// Spectral derivative ∂^α of every component.
pub fn derivative(f: &VectorField, alpha: DerivativeIndex) -> Result<VectorField> {
    if alpha.order() > 4 {
        return Err(Error::Unsupported(format!("derivative order {} above 4", alpha.order())));
    }
    if alpha.is_zero() {
        return Ok(f.clone());
    }
    let s = f.spectral();
    let comps = [0, 1, 2].map(|c| inverse(&f.grid, derivative_spectrum(&f.grid, &s.comps[c], alpha).view()));
    Ok(VectorField { grid: f.grid.clone(), comps })
}

/// Leray projection onto divergence-free fields.
pub fn project_div_free(f: &VectorField) -> VectorField {
    let mut s = f.spectral();
    s.project();
    s.to_real()
}

/// Spectral divergence in real space.
pub fn divergence(f: &VectorField) -> Array3<f64> {
    inverse(&f.grid, f.spectral().divergence().view())
}

/// max |∇·f| relative to max |f| (0 for the zero field).
pub fn divergence_ratio(f: &VectorField) -> f64 {
    let amp = f.max_abs();
    if amp == 0.0 {
        return 0.0;
    }
    divergence(f).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / amp
}

/// Spectral curl in real space.
pub fn curl(f: &VectorField) -> VectorField {
    f.spectral().curl().to_real()
}

impl MhdState {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        MhdState { u: VectorField::zeros(grid), b: VectorField::zeros(grid), t: 0.0 }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    /// ‖u‖² + ‖B‖².
    pub fn energy(&self) -> f64 {
        self.u.l2().powi(2) + self.b.l2().powi(2)
    }

    /// Largest relative divergence of u and B.
    pub fn divergence_ratio(&self) -> f64 {
        divergence_ratio(&self.u).max(divergence_ratio(&self.b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn unit_grid(n: usize) -> Arc<Grid> {
        make_grid(2.0 * PI, 2.0 * PI, [n, n, n]).unwrap()
    }

    // from_fn uses centered coordinates; shift back to [0, 2π).
    fn field(g: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> VectorField {
        VectorField::from_fn(g, |x| f(x[0] + PI, x[1] + PI, x[2] + PI))
    }

    fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn derivative_of_sine() {
        let g = unit_grid(16);
        let f = field(&g, |x, _, _| [x.sin(), 0.0, 0.0]);
        let d = derivative(&f, DerivativeIndex::new(1, 0, 0)).unwrap();
        let e = field(&g, |x, _, _| [x.cos(), 0.0, 0.0]);
        assert!(max_diff(&d, &e) < 1e-12);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = unit_grid(8);
        let f = field(&g, |_, _, _| [2.5, -1.0, 3.0]);
        for a in [DerivativeIndex::new(1, 0, 0), DerivativeIndex::new(0, 1, 1), DerivativeIndex::new(0, 0, 2)] {
            assert!(derivative(&f, a).unwrap().max_abs() < 1e-13);
        }
    }

    #[test]
    fn mixed_derivative_product_rule() {
        let g = unit_grid(16);
        let f = field(&g, |_, y, z| [(3.0 * y).sin() * (2.0 * z).cos(), 0.0, 0.0]);
        let d = derivative(&f, DerivativeIndex::new(0, 1, 1)).unwrap();
        let e = field(&g, |_, y, z| [-6.0 * (3.0 * y).cos() * (2.0 * z).sin(), 0.0, 0.0]);
        assert!(max_diff(&d, &e) < 1e-11);
    }

    #[test]
    fn projection_keeps_solenoidal_and_kills_gradients() {
        let g = unit_grid(16);
        let f = field(&g, |_, y, _| [y.sin(), 0.0, 0.0]);
        assert!(max_diff(&project_div_free(&f), &f) < 1e-13);
        let grad = field(&g, |x, _, _| [x.cos(), 0.0, 0.0]);
        assert!(project_div_free(&grad).max_abs() < 1e-13);
    }

    #[test]
    fn projection_of_mixed_field_matches_modewise_split() {
        // Oracle: for each mode, subtract the component along k. The single-axis
        // modes of sin(y) e1 are transverse and cos(x) e1 is longitudinal.
        let g = unit_grid(16);
        let f = field(&g, |x, y, _| [y.sin() + x.cos(), 0.0, 0.0]);
        let p = project_div_free(&f);
        let mut expect = SpectralVector::zeros(&g);
        let s = f.spectral();
        for c in 0..3 {
            for ((i, j, l), v) in s.component(c).indexed_iter() {
                let k = g.wavevector(i, j, l);
                let k2: f64 = k.iter().map(|x| x * x).sum();
                let mut w = *v;
                if k2 > 0.0 {
                    let dot: Complex64 = (0..3).map(|d| s.component(d)[[i, j, l]] * k[d]).sum();
                    w -= dot * k[c] / k2;
                }
                expect.component_mut(c)[[i, j, l]] = w;
            }
        }
        assert!(max_diff(&p, &expect.to_real()) < 1e-13);
        let e = field(&g, |_, y, _| [y.sin(), 0.0, 0.0]);
        assert!(max_diff(&p, &e) < 1e-13);
    }

    #[test]
    fn curl_is_divergence_free() {
        let g = unit_grid(16);
        let a = field(&g, |x, y, z| [(x + 2.0 * z).sin(), (y - z).cos() * x.sin(), (2.0 * x).cos()]);
        let c = curl(&a);
        assert!(divergence_ratio(&c) < 1e-12);
    }

    #[test]
    fn spectral_l2_matches_grid_sum() {
        let g = make_grid(3.0, 5.0, [8, 8, 12]).unwrap();
        let f = VectorField::from_fn(&g, |x| [(-x[0] * x[0]).exp(), x[1] * (-x[2] * x[2]).exp(), 0.3]);
        let a = f.l2().powi(2);
        let b = f.spectral().l2_squared();
        assert!(((a - b) / a).abs() < 1e-12);
    }
}
