use thiserror::Error;

/// Errors raised by the solver, diagnostics and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("field representation mismatch: expected {expected}")]
    RepMismatch { expected: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time step {dt:e} exceeds the CFL limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite values detected; last valid time t = {last_valid_t}")]
    NonFinite { last_valid_t: f64 },

    #[error("initial condition violates {condition}: trace norm {trace_norm:e}")]
    IncompatibleInitial { condition: &'static str, trace_norm: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("time grids do not align: {0}")]
    TimeMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Numerical failures map to exit code 2 in the CLI, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::NonFinite { .. })
    }
}
