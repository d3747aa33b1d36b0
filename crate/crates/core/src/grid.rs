//! Periodic box grids and wavenumber tables.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fft::Fft3;
use crate::{Error, Result};

/// Multi-index of a partial derivative ∂₁^a ∂₂^b ∂₃^c.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DerivativeIndex(pub [u32; 3]);

impl DerivativeIndex {
    pub const ZERO: DerivativeIndex = DerivativeIndex([0, 0, 0]);

    pub fn new(a1: u32, a2: u32, a3: u32) -> Self {
        DerivativeIndex([a1, a2, a3])
    }

    /// Unit index along `axis`.
    pub fn unit(axis: usize) -> Self {
        let mut a = [0; 3];
        a[axis] = 1;
        DerivativeIndex(a)
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn horizontal(&self) -> [u32; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn horizontal_order(&self) -> u32 {
        self.0[0] + self.0[1]
    }

    pub fn vertical_order(&self) -> u32 {
        self.0[2]
    }

    pub fn is_zero(&self) -> bool {
        self.order() == 0
    }

    /// Fourier symbol Π (i k_j)^{α_j}.
    pub fn symbol(&self, k: [f64; 3]) -> num_complex::Complex64 {
        let mut s = num_complex::Complex64::new(1.0, 0.0);
        for (axis, &a) in self.0.iter().enumerate() {
            for _ in 0..a {
                s *= num_complex::Complex64::new(0.0, k[axis]);
            }
        }
        s
    }
}

impl fmt::Display for DerivativeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.0[0], self.0[1], self.0[2])
    }
}

impl std::str::FromStr for DerivativeIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = if s.contains(',') {
            s.split(',').map(str::trim).collect()
        } else {
            s.trim().split("").filter(|c| !c.is_empty()).collect()
        };
        if parts.len() != 3 {
            return Err(Error::InvalidArgument(format!("derivative index '{s}' needs three entries")));
        }
        let mut a = [0u32; 3];
        for (slot, p) in a.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("derivative index '{s}'")))?;
        }
        Ok(DerivativeIndex(a))
    }
}

/// A periodic box of side lengths (L_h, L_h, L_v) sampled at (N_x, N_y, N_z)
/// points. Owns the FFT plans for its shape.
pub struct Grid {
    n: [usize; 3],
    lengths: [f64; 3],
    kx: Vec<f64>,
    ky: Vec<f64>,
    kz: Vec<f64>,
    fft: Fft3,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.n).field("lengths", &self.lengths).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.lengths == other.lengths
    }
}

/// Build a grid with horizontal side `l_h`, vertical side `l_v` and resolution `n`.
pub fn make_grid(l_h: f64, l_v: f64, n: [usize; 3]) -> Result<Arc<Grid>> {
    if !(l_h > 0.0 && l_v > 0.0 && l_h.is_finite() && l_v.is_finite()) {
        return Err(Error::InvalidGrid(format!("box lengths must be positive, got ({l_h}, {l_v})")));
    }
    for &ni in &n {
        if ni < 8 || ni % 2 != 0 {
            return Err(Error::InvalidGrid(format!("resolution {n:?}: each entry must be even and at least 8")));
        }
    }
    let lengths = [l_h, l_h, l_v];
    let full = |ni: usize, l: f64| -> Vec<f64> {
        (0..ni)
            .map(|i| {
                let m = if i <= ni / 2 { i as f64 } else { i as f64 - ni as f64 };
                2.0 * PI * m / l
            })
            .collect()
    };
    let kx = full(n[0], lengths[0]);
    let ky = full(n[1], lengths[1]);
    let kz = (0..=n[2] / 2).map(|i| 2.0 * PI * i as f64 / lengths[2]).collect();
    Ok(Arc::new(Grid { n, lengths, kx, ky, kz, fft: Fft3::new(n) }))
}

impl Grid {
    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn lengths(&self) -> [f64; 3] {
        self.lengths
    }

    pub fn l_h(&self) -> f64 {
        self.lengths[0]
    }

    pub fn l_v(&self) -> f64 {
        self.lengths[2]
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.lengths[a] / self.n[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shape of real-space arrays.
    pub fn real_shape(&self) -> (usize, usize, usize) {
        (self.n[0], self.n[1], self.n[2])
    }

    /// Shape of half-spectrum arrays (last axis halved).
    pub fn spectral_shape(&self) -> (usize, usize, usize) {
        (self.n[0], self.n[1], self.n[2] / 2 + 1)
    }

    pub(crate) fn fft(&self) -> &Fft3 {
        &self.fft
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    /// Non-negative vertical wavenumbers of the half spectrum.
    pub fn kz(&self) -> &[f64] {
        &self.kz
    }

    /// Wavevector of half-spectrum entry (i, j, l).
    #[inline]
    pub fn wavevector(&self, i: usize, j: usize, l: usize) -> [f64; 3] {
        [self.kx[i], self.ky[j], self.kz[l]]
    }

    /// Integer mode indices (signed) of half-spectrum entry (i, j, l).
    #[inline]
    pub fn mode_index(&self, i: usize, j: usize, l: usize) -> [i64; 3] {
        let s = |i: usize, n: usize| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
        [s(i, self.n[0]), s(j, self.n[1]), l as i64]
    }

    /// True if any index of entry (i, j, l) sits on a Nyquist plane.
    #[inline]
    pub fn is_nyquist(&self, i: usize, j: usize, l: usize) -> bool {
        i == self.n[0] / 2 || j == self.n[1] / 2 || l == self.n[2] / 2
    }

    /// Parseval multiplicity of a half-spectrum plane: interior planes stand
    /// for a conjugate pair.
    #[inline]
    pub fn multiplicity(&self, l: usize) -> f64 {
        if l == 0 || l == self.n[2] / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Sharp truncation mask: keep modes with |m_a| < fraction · N_a / 2 on every axis.
    #[inline]
    pub fn in_band(&self, i: usize, j: usize, l: usize, fraction: f64) -> bool {
        let m = self.mode_index(i, j, l);
        (0..3).all(|a| (m[a].unsigned_abs() as f64) < fraction * self.n[a] as f64 / 2.0)
    }

    /// Coordinate of grid index `i` along `axis`, measured from the box center.
    #[inline]
    pub fn centered_coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.lengths[axis] / self.n[axis] as f64;
        i as f64 * h - self.lengths[axis] / 2.0
    }

    /// Longest time for which whole-space algebraic decay is observable.
    pub fn window_limit(&self) -> f64 {
        let lmin = self.lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        crate::tolerances::WINDOW_FACTOR * (lmin / (2.0 * PI)).powi(2)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }
}
