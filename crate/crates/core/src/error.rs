use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("target distribution {target} is not of the form i/2^{l}")]
    UnrepresentableBias { target: f64, l: usize },

    #[error("quadrature did not converge: error estimate {achieved:e} exceeds {tolerance:e}")]
    QuadratureNotConverged { achieved: f64, tolerance: f64 },

    #[error("cannot build code: {0}")]
    InfeasibleCode(String),

    #[error("codeword segment of {needed} cells does not fit in a {m}x{n} array")]
    CapacityExceeded { needed: usize, m: usize, n: usize },

    #[error("malformed {what}: {reason}")]
    Parse { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("{p} is not a probability")))
    }
}
