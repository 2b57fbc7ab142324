use thiserror::Error;

/// Errors raised anywhere in the walk/derivation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("{what} is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { what: String, deviation: f64 },

    #[error("not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    BadTrace(f64),

    #[error("Jacobi eigensolver did not converge within {0} sweeps")]
    NoConvergence(usize),

    #[error("degenerate spectrum in {what}: eigenvalue gap {gap:.3e} below {tol:.3e}")]
    DegenerateSpectrum { what: String, gap: f64, tol: f64 },

    #[error("frequency {0} is not a Bohr frequency of this model")]
    UnknownFrequency(f64),

    #[error("zero-frequency eigenoperator requires an explicit zero-frequency rate")]
    ZeroFrequency,

    #[error("step too large: {0}")]
    StepTooLarge(String),

    #[error("Kraus family not normalized at node {node} (residual {residual:.3e} > {tol:.3e})")]
    NotNormalized { node: usize, residual: f64, tol: f64 },

    #[error("total trace vanished ({0:.3e})")]
    ZeroTrace(f64),

    #[error("integration unstable at t = {time}: block norm {norm:.3e}")]
    StepUnstable { time: f64, norm: f64 },

    #[error("not converged: {0}")]
    NotConverged(String),

    #[error("bad parameter {name}: {reason}")]
    BadParameter { name: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn bad_parameter(name: &str, reason: impl Into<String>) -> Self {
        Error::BadParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::NoConvergence(_)
            | Error::StepTooLarge(_)
            | Error::ZeroTrace(_)
            | Error::StepUnstable { .. }
            | Error::NotConverged(_) => 4,
            Error::Io(_) => 5,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
