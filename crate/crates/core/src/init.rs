//! Initial-data generators, all centered at the box center.

use std::sync::Arc;

use ndarray::{Array3, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{forward, MhdState, SpectralVector, Spectrum, VectorField};
use crate::grid::Grid;
use crate::tolerances::DEALIAS_TWO_THIRDS;
use crate::{Error, Result};

const ENVELOPE_CUTOFF: f64 = 1e-14;

/// Coefficients of the vector potential used when no seed is involved.
pub const DEFAULT_POTENTIAL: [f64; 3] = [0.3, -0.7, 0.5];

/// Spectrum of the sampled Gaussian e^{-|x|²/2σ²}, truncated below 1e-14.
pub fn gaussian_spectrum(grid: &Arc<Grid>, sigma: f64) -> Result<Spectrum> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("Gaussian width must be positive, got {sigma}")));
    }
    let (nx, ny, nz) = grid.real_shape();
    let mut a = Array3::<f64>::zeros((nx, ny, nz));
    Zip::indexed(&mut a).par_for_each(|(i, j, l), v| {
        let x = [grid.centered_coord(0, i), grid.centered_coord(1, j), grid.centered_coord(2, l)];
        let g = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (2.0 * sigma * sigma)).exp();
        *v = if g < ENVELOPE_CUTOFF { 0.0 } else { g };
    });
    Ok(forward(grid, a.view()))
}

/// Zero every mode outside the dealiasing band.
pub fn band_limit(grid: &Grid, s: &mut Spectrum, fraction: f64) {
    Zip::indexed(s).par_for_each(|(i, j, l), v| {
        if !grid.in_band(i, j, l, fraction) {
            *v = Complex64::new(0.0, 0.0);
        }
    });
}

/// ∂_axis of a scalar spectrum; only the Nyquist plane of that axis is dropped.
fn partial(grid: &Grid, psi: &Spectrum, axis: usize) -> Spectrum {
    let n = grid.n()[axis] as i64;
    let mut out = psi.clone();
    Zip::indexed(&mut out).par_for_each(|(i, j, l), v| {
        let m = grid.mode_index(i, j, l)[axis];
        if m.abs() == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, grid.wavevector(i, j, l)[axis]);
        }
    });
    out
}

/// Spectral curl of the potential a·ψ.
pub fn curl_of_potential(grid: &Arc<Grid>, psi: &Spectrum, a: [f64; 3]) -> SpectralVector {
    let d: Vec<Spectrum> = (0..3).map(|axis| partial(grid, psi, axis)).collect();
    let comps = [
        &d[1] * a[2] - &d[2] * a[1],
        &d[2] * a[0] - &d[0] * a[2],
        &d[0] * a[1] - &d[1] * a[0],
    ];
    SpectralVector::from_components(grid, comps).expect("curl built on its own grid")
}

/// Curl of a vector Gaussian potential, optionally restricted to the dealiasing band.
pub fn curl_gaussian(grid: &Arc<Grid>, sigma: f64, a: [f64; 3], band_limited: bool) -> Result<VectorField> {
    let mut psi = gaussian_spectrum(grid, sigma)?;
    if band_limited {
        band_limit(grid, &mut psi, DEALIAS_TWO_THIRDS);
    }
    Ok(curl_of_potential(grid, &psi, a).to_real())
}

/// Divergence-free field (−∂₃ψ, 0, ∂₁ψ) and the control (0, 0, |∂₁ψ|), which
/// shares the vertical component's magnitude but not its zero horizontal mean.
pub fn dipole_pair(grid: &Arc<Grid>, sigma: f64) -> Result<(VectorField, VectorField)> {
    let psi = gaussian_spectrum(grid, sigma)?;
    let d = |axis| partial(grid, &psi, axis);
    let zero = Spectrum::zeros(grid.spectral_shape());
    let v = SpectralVector::from_components(grid, [-d(2), zero.clone(), d(0)])?.to_real();
    let ctrl = v.component(2).mapv(f64::abs);
    let control = VectorField::from_components(grid, [Array3::zeros(ctrl.dim()), Array3::zeros(ctrl.dim()), ctrl])?;
    Ok((v, control))
}

/// H^s norm of the pair (u, B).
pub fn state_sobolev_norm(state: &MhdState, s: f64) -> f64 {
    (state.u.spectral().sobolev_squared(s) + state.b.spectral().sobolev_squared(s)).sqrt()
}

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n2 = a.iter().map(|x| x * x).sum::<f64>();
        if n2 > 0.05 && n2 <= 1.0 {
            let n = n2.sqrt();
            return a.map(|x| x / n);
        }
    }
}

fn default_width() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_sobolev() -> f64 {
    3.0
}

/// Named initial-data recipe; `amplitude` is the H^s norm of (u₀, B₀).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum InitRecipe {
    Zero,
    CurlGaussian {
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_true")]
        band_limited: bool,
        #[serde(default = "default_true")]
        magnetic: bool,
        #[serde(default = "default_sobolev")]
        sobolev: f64,
    },
}

impl InitRecipe {
    pub fn curl_gaussian(amplitude: f64, seed: u64) -> Self {
        InitRecipe::CurlGaussian {
            amplitude,
            width: default_width(),
            seed,
            band_limited: true,
            magnetic: true,
            sobolev: default_sobolev(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        match self {
            InitRecipe::Zero => 0.0,
            InitRecipe::CurlGaussian { amplitude, .. } => *amplitude,
        }
    }

    pub fn with_amplitude(&self, a: f64) -> Self {
        let mut r = self.clone();
        if let InitRecipe::CurlGaussian { amplitude, .. } = &mut r {
            *amplitude = a;
        }
        r
    }

    pub fn build(&self, grid: &Arc<Grid>) -> Result<MhdState> {
        match *self {
            InitRecipe::Zero => Ok(MhdState::zeros(grid)),
            InitRecipe::CurlGaussian { amplitude, width, seed, band_limited, magnetic, sobolev } => {
                if !(amplitude >= 0.0 && amplitude.is_finite()) {
                    return Err(Error::InvalidArgument(format!("amplitude must be non-negative, got {amplitude}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let au = random_direction(&mut rng);
                let ab = random_direction(&mut rng);
                let u = curl_gaussian(grid, width, au, band_limited)?;
                let b = if magnetic { curl_gaussian(grid, width, ab, band_limited)? } else { VectorField::zeros(grid) };
                let mut state = MhdState { u, b, t: 0.0 };
                let norm = state_sobolev_norm(&state, sobolev);
                if norm > 0.0 {
                    let s = amplitude / norm;
                    state.u = state.u.scaled(s);
                    state.b = state.b.scaled(s);
                }
                Ok(state)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::divergence_ratio;
    use crate::grid::make_grid;

    #[test]
    fn recipe_is_divergence_free_and_normalized() {
        let g = make_grid(40.0, 40.0, [24, 24, 24]).unwrap();
        let r = InitRecipe::curl_gaussian(0.05, 3);
        let s = r.build(&g).unwrap();
        assert!(s.divergence_ratio() < 1e-12);
        assert!((state_sobolev_norm(&s, 3.0) - 0.05).abs() < 1e-12);
        let s2 = r.build(&g).unwrap();
        assert_eq!(s.u.component(0), s2.u.component(0));
    }

    #[test]
    fn recipe_round_trips_through_json() {
        let r = InitRecipe::curl_gaussian(0.02, 9);
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("curl-gaussian"));
        assert_eq!(serde_json::from_str::<InitRecipe>(&j).unwrap(), r);
        let z: InitRecipe = serde_json::from_str(r#"{"generator":"zero"}"#).unwrap();
        assert_eq!(z, InitRecipe::Zero);
    }

    #[test]
    fn dipole_is_divergence_free_and_control_is_not_mean_zero() {
        let g = make_grid(40.0, 40.0, [24, 24, 24]).unwrap();
        let (v, c) = dipole_pair(&g, 1.0).unwrap();
        assert!(divergence_ratio(&v) < 1e-12);
        let s: f64 = v.component(2).sum();
        let sc: f64 = c.component(2).sum();
        assert!(s.abs() < 1e-12 * sc);
        assert!(sc > 0.0);
    }
}
