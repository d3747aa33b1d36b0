//! Named numerical thresholds shared by the library and its tests.

/// Default dealiasing fraction (sharp 2/3 truncation).
pub const DEALIAS_TWO_THIRDS: f64 = 2.0 / 3.0;

/// Courant number for the explicit nonlinear part.
pub const CFL_NUMBER: f64 = 0.5;

/// Maximum number of successive step halvings before a run aborts.
pub const MAX_STEP_HALVINGS: u32 = 5;

/// Re-project the magnetic field every this many steps.
pub const MAGNETIC_REPROJECT_INTERVAL: usize = 50;

/// Fraction c in the intermediate window bound t <= c (L / 2 pi)^2.
pub const WINDOW_FACTOR: f64 = 0.05;

/// Relative L1 mass allowed outside the middle half of the box for data to
/// count as localized.
pub const LOCALIZATION_TOLERANCE: f64 = 0.1;

/// Default amplitude envelope for small-data runs.
pub const AMPLITUDE_ENVELOPE: f64 = 0.05;

/// Profile-integral tail fractions: below `TAIL_WARN` is accepted silently,
/// above `TAIL_REFUSE` the integral is rejected.
pub const TAIL_WARN: f64 = 0.01;
pub const TAIL_REFUSE: f64 = 0.05;

/// Minimum number of snapshots in [0, t] for Duhamel quadrature.
pub const MIN_DUHAMEL_SNAPSHOTS: usize = 16;

/// Point count and decade span required by the exponent fits.
pub const MIN_FIT_POINTS: usize = 6;
pub const MIN_FIT_DECADES_KERNEL: f64 = 1.5;
pub const MIN_FIT_DECADES_SERIES: f64 = 1.0;

/// Pass bands used by the rate tables.
pub const RATE_TOLERANCE: f64 = 0.15;
pub const RATE_BOUND_TOLERANCE: f64 = 0.2;

/// Below this multiple of sqrt(t) the N kernel takes its value at the origin.
pub const N_ORIGIN_RADIUS: f64 = 1e-8;

/// Spatial truncation radius for Gaussian-type quadrature, in units of sqrt(t).
pub const GAUSS_TRUNCATION: f64 = 12.0;
