use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate channel for user {user}: the beamformer gain vanishes")]
    DegenerateChannel { user: usize },

    #[error("fixed-point stage {stage} did not converge after {iters} iterations (last residual {residual:e})")]
    FpDivergence {
        stage: u8,
        iters: usize,
        residual: f64,
    },

    #[error("dual iterate norm {norm:e} exceeded {limit:e} at iteration {iteration}: the power budgets look infeasible")]
    DualUnbounded { iteration: usize, norm: f64, limit: f64 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
