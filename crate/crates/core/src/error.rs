use thiserror::Error;

/// Errors raised by the library.
///
/// `Diagnostic` is reserved for internal consistency checks that should never
/// fire for well-conditioned inputs (two independent tests disagreeing, a
/// structural identity failing numerically). It usually means a tolerance is
/// misconfigured for the input at hand.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not irreducible (margin {margin:.3e})")]
    NotIrreducible { margin: f64 },

    #[error("fixed point is not positive definite (min eigenvalue ratio {ratio:.3e}); map cannot be normalized")]
    NotNormalizable { ratio: f64 },

    #[error("multiplicity index mismatch: {a:?} vs {b:?}; no degree-preserving path exists")]
    IndexMismatch { a: Vec<usize>, b: Vec<usize> },

    #[error("Kraus rank mismatch: {a} vs {b}")]
    RankMismatch { a: usize, b: usize },

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("eigensolver failure: {0}")]
    Eigen(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
