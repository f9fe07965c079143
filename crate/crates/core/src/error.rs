use thiserror::Error;

/// Error type shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Denominator of zero, or a non-finite float where a number was needed.
    #[error("invalid rational: {0}")]
    InvalidRational(String),

    /// Matrix failed the Hermitian symmetry test; carries the largest
    /// asymmetry `max |H_ij - conj(H_ji)|` found.
    #[error("matrix is not Hermitian: max asymmetry {0:.3e} exceeds tolerance {1:.3e}")]
    NotHermitian(f64, f64),

    /// Vector or matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Dense solver refused the input size.
    #[error("dimension {0} exceeds the configured maximum {1}")]
    DimensionTooLarge(usize, usize),

    /// Jacobi sweeps did not push the off-diagonal mass under threshold.
    #[error("eigensolver failed to converge after {0} sweeps (off-diagonal norm {1:.3e})")]
    EigenNoConvergence(usize, f64),

    /// State vector norm too far from one to be used as given.
    #[error("state norm {0} is too far from 1; enable auto_normalize or fix the input")]
    BadNorm(f64),

    /// The requested quantity needs a normalized, non-empty support.
    #[error("state has empty support at eps_support {0:.3e}")]
    EmptySupport(f64),

    /// Operation defined only for cyclic states.
    #[error("state is not cyclic: {0}")]
    NotCyclic(String),

    /// Operation defined only for non-stationary states.
    #[error("state is stationary: {0}")]
    Stationary(String),

    /// Scenario file could not be read or parsed.
    #[error("scenario error: {0}")]
    Scenario(String),

    /// Anything that indicates a misuse of an interface rather than bad
    /// numerical luck.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
