use std::io;

use crate::lattice::LatticePoint;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty set has no connectivity status")]
    EmptySet,

    /// A grid or transform could not be sized or allocated.
    #[error("cannot allocate grid of dimensions {dims:?} ({reason})")]
    Sizing { dims: Vec<usize>, reason: String },

    #[error("invalid swap move: {reason} (cell {cell})")]
    InvalidMove { cell: LatticePoint, reason: String },

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    /// Non-finite energy during minimization. Carries the last finite iterate.
    #[error("numerical failure at iteration {iteration}: {reason}")]
    Numerical {
        iteration: usize,
        reason: String,
        last_valid: Box<crate::field::FieldGrid>,
    },

    #[error("parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            line,
            reason: reason.into(),
        }
    }
}
