use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("quadrature did not converge: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("time window too long: t = {t} exceeds the periodic-image limit {limit}")]
    WindowTooLong { t: f64, limit: f64 },

    #[error("CFL violation persists after {halvings} step halvings at t = {t}")]
    CflAbort { t: f64, halvings: u32 },

    #[error("non-finite value encountered at step {step} (t = {t})")]
    NonFinite { step: usize, t: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient snapshots: {0}")]
    Snapshots(String),

    #[error("missing ingredient: {0}")]
    MissingIngredient(String),

    #[error("profile integral tail too large: {fraction:.3} of the accumulated value")]
    TailTooLarge { fraction: f64 },

    #[error("insufficient disk space: need {needed} bytes, {available} available")]
    DiskSpace { needed: u64, available: u64 },

    #[error("corrupt container {path}: {reason}")]
    Container { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
