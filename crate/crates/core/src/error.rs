use thiserror::Error;

/// Errors raised by the simulator and the analytic routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bin index {index} out of range for {num_bins} bins")]
    BinOutOfRange { index: usize, num_bins: usize },

    #[error(
        "Gram-Schmidt degeneracy at vector {index}: residual norm {residual:e} below {threshold:e}"
    )]
    Degenerate {
        index: usize,
        residual: f64,
        threshold: f64,
    },

    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("brute-force oracle limited to m <= {cap}, got m = {m}")]
    OracleCapExceeded { m: usize, cap: usize },

    #[error("empty search grid")]
    EmptyGrid,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
