use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    /// The collective single-spin reduction only holds for Bragg-spaced arrays.
    #[error("collective reduction invalid: {0}")]
    CollectiveInvalid(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("closed form does not apply: {0}")]
    InvalidCase(String),

    #[error("numerical failure in branch {branch} at t = {t}: {reason}")]
    NumericalFailure {
        branch: String,
        t: f64,
        reason: String,
    },

    #[error("trajectory history too short: need t up to {required}, have {available}")]
    HistoryTooShort { required: f64, available: f64 },

    #[error("oracle recurrence window exceeded: t = {t} > 2π/Δω = {window}")]
    OracleWindowExceeded { t: f64, window: f64 },

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
