use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] anismhd::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("trajectory {path}: {reason}")]
    Trajectory { path: PathBuf, reason: String },
    #[error("trajectory does not match the campaign: {0}")]
    Mismatch(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
