use thiserror::Error;

use crate::numerics::Point;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value left floating-point range (overflow, or underflow of a
    /// quantity that must stay positive) at a quadrature node or sample point.
    #[error("value {value} out of floating-point range at {point}: {context}")]
    NumericalDomain {
        point: Point,
        value: f64,
        context: String,
    },

    /// A truncated integral or lattice sum failed its convergence check.
    #[error("diverged: {0}")]
    Diverged(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn domain(point: Point, value: f64, context: impl Into<String>) -> Self {
        Error::NumericalDomain {
            point,
            value,
            context: context.into(),
        }
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Diverged(_))
    }
}

/// Outcome of a ratio whose denominator may vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Both numerator and denominator vanish.
    Undefined,
    /// The denominator vanishes while the numerator does not.
    Infinite,
}

impl Ratio {
    pub fn from_parts(num: f64, den: f64) -> Self {
        if den > 0.0 {
            Ratio::Finite(num / den)
        } else if num == 0.0 {
            Ratio::Undefined
        } else {
            Ratio::Infinite
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Finite(v) => Some(v),
            _ => None,
        }
    }
}
