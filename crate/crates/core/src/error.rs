use thiserror::Error;

/// Failures shared by every evaluator in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("theta series did not converge: {0}")]
    NonConvergent(String),
    #[error("theta series overflows double range: {0}")]
    Overflow(String),
    #[error("argument {0} too close to a lattice pole")]
    PoleProximity(String),
    #[error("incompatible rank: {0}")]
    IncompatibleRank(String),
    #[error("site index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("square root crosses its branch cut: {0}")]
    BranchCut(String),
    #[error("division by a degenerate quantity: {0}")]
    DivisionDegenerate(String),
    #[error("degenerate multiplicative parameter t: {0}")]
    DegenerateT(String),
    #[error("eigensolver did not converge: {0}")]
    NonConvergentEigensolve(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Variant name, stable across messages.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonConvergent(_) => "NonConvergent",
            Error::Overflow(_) => "Overflow",
            Error::PoleProximity(_) => "PoleProximity",
            Error::IncompatibleRank(_) => "IncompatibleRank",
            Error::IndexOutOfRange(_) => "IndexOutOfRange",
            Error::BranchCut(_) => "BranchCut",
            Error::DivisionDegenerate(_) => "DivisionDegenerate",
            Error::DegenerateT(_) => "DegenerateT",
            Error::NonConvergentEigensolve(_) => "NonConvergentEigensolve",
            Error::InvalidParams(_) => "InvalidParams",
        }
    }
}
