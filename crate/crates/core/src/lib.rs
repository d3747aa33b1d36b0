//! Pseudo-spectral tools for anisotropic incompressible MHD on periodic boxes.
//!
//! Two systems are supported. In [`SystemKind::A`] the velocity diffuses only
//! horizontally and the magnetic field fully; [`SystemKind::B`] swaps the roles.
//! The crate provides the grid and field layer, explicit heat-type kernels and
//! their norms, linear propagators, a nonlinear solver, Duhamel term
//! decompositions and asymptotic-profile diagnostics.

pub mod asympt;
pub mod duhamel;
pub mod error;
pub mod fft;
pub mod field;
pub mod fit;
pub mod grid;
pub mod init;
pub mod io;
pub mod kernels;
pub mod linprop;
pub mod norms;
pub mod quadrature;
pub mod solver;
pub mod tolerances;

pub use error::{Error, Result};
pub use field::{MhdState, SpectralVector, VectorField};
pub use grid::{make_grid, DerivativeIndex, Grid};
pub use solver::SystemKind;
