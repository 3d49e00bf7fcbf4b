use thiserror::Error;

/// Errors raised by the Fock-space engine, the closed forms and the oracle.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Fock cutoff {n_max} leaves tail weight {tail:.3e} above tolerance {tol:.3e}")]
    TruncationTooSmall { n_max: usize, tail: f64, tol: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue {value:.3e} is below the negative floor {floor:.3e}")]
    NegativeEigenvalue { value: f64, floor: f64 },

    #[error("transmittance {0} outside [0, 1]")]
    InvalidEta(f64),

    #[error("invalid probe: {0}")]
    InvalidProbe(String),

    #[error("degenerate spectrum: 1 - 4 det = {0:.3e}")]
    DegenerateSpectrum(f64),

    #[error("invalid weights: gamma_plus = {gamma_plus}, gamma_minus = {gamma_minus}")]
    InvalidWeights { gamma_plus: f64, gamma_minus: f64 },

    #[error("Fisher information must be positive, got {0}")]
    NonpositiveFisher(f64),

    #[error("invalid repetition count {0}")]
    InvalidRepetitions(u32),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("eigendecomposition failed to converge")]
    EigenFailure,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
