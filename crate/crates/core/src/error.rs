use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("Jacobi diagonalization did not converge within {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("trace has imaginary residual {0:e}; operand is not Hermitian")]
    ImaginaryResidual(f64),

    #[error("negative variance {0:e}; state is not a valid density matrix")]
    NegativeVariance(f64),

    #[error("negative second moment {0:e} in difference distribution")]
    NegativeMoment(f64),

    #[error("spectrum of the meter readout does not match the measured observable")]
    SpectrumMismatch,

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probe strength {strength} is below the minimum {min}")]
    StrengthTooSmall { strength: f64, min: f64 },

    #[error("outcome table has no probability mass to post-select on")]
    ZeroMarginal,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
