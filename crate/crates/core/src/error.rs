use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("operator is not Hermitian (max |M - M^H| = {0:.3e})")]
    NotHermitian(f64),

    #[error("observable `{0}` has no spectral decomposition; call diagonalize first")]
    NotDiagonalized(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    /// Grid, pointer-grid or truncation problems that a finer or wider
    /// discretization would fix.
    #[error("numerical regime: {0}")]
    NumericalRegime(String),

    #[error("IWM regime not established: {0}")]
    IwmNotEstablished(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::NumericalRegime(msg.into())
    }
}
