use thiserror::Error;

/// Errors produced by the solvers, samplers, oracle and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("Kronecker product of size {rows}x{cols} exceeds the verification cap of {cap}")]
    KronCap {
        rows: usize,
        cols: usize,
        cap: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero {0}")]
    ZeroSlice(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("degenerate Gaussian sketch: {0}")]
    DegenerateDraw(String),

    #[error("iterate diverged at iteration {iter} (|X|_F = {norm:e})")]
    Diverged { iter: usize, norm: f64 },

    #[error("method `{method}` cannot be used with sketch `{sketch}`: {reason}")]
    Incompatible {
        method: String,
        sketch: String,
        reason: String,
    },

    #[error("{source_name}:{line}: {msg}")]
    Parse {
        source_name: String,
        line: usize,
        msg: String,
    },

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
