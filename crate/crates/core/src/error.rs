use alloc::string::String;
use core::fmt;

/// Errors raised by the laboratory's operations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid arguments: out-of-range parameters, mismatched dimensions,
    /// configurations outside the state space.
    Usage(String),
    /// An enumeration or allocation would exceed the configured budget.
    Capacity { required: u64, budget: u64 },
    /// Adaptive quadrature did not reach its tolerance.
    Quadrature { residual: f64 },
    /// Not enough Monte Carlo samples for the requested statistic.
    InsufficientSamples(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Usage(msg) => write!(f, "usage error: {msg}"),
            Error::Capacity { required, budget } => write!(
                f,
                "capacity error: {required} states required, budget is {budget}"
            ),
            Error::Quadrature { residual } => write!(
                f,
                "quadrature did not converge (last residual estimate {residual:e})"
            ),
            Error::InsufficientSamples(msg) => write!(f, "insufficient samples: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
