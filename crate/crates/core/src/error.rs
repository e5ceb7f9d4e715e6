use core::fmt;

use crate::solver::SolverError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The instance data violates one of its invariants.
    InvalidInstance(&'static str),
    /// Row `row` has squared norm outside `(0, 1]`.
    RowNorm {
        row: usize,
        norm_sq: f64,
    },
    /// Cost `index` lies outside `[0, B]`.
    CostOutOfRange {
        index: usize,
        cost: f64,
    },
    /// A supplied norm floor disagrees with the data.
    NormFloor {
        supplied: f64,
        observed: f64,
    },
    IndexOutOfRange {
        index: usize,
        n: usize,
    },
    AlreadyMember(usize),
    /// A fractional coordinate lies outside its admissible interval.
    Domain {
        index: usize,
        value: f64,
    },
    /// Exhaustive enumeration requested above its size cap.
    TooLarge {
        n: usize,
        cap: usize,
    },
    NotPositiveDefinite,
    /// A fractional point violates the budget constraint.
    BudgetInfeasible {
        spent: f64,
        budget: f64,
    },
    InvalidParameter(&'static str),
    NotAllocated(usize),
    Solver(SolverError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::RowNorm { row, norm_sq } => {
                write!(f, "row {row} has squared norm {norm_sq}, expected (0, 1]")
            }
            Error::CostOutOfRange { index, cost } => {
                write!(f, "cost {cost} of item {index} is outside [0, B]")
            }
            Error::NormFloor { supplied, observed } => {
                write!(f, "norm floor {supplied} is inconsistent with the smallest squared row norm {observed}")
            }
            Error::IndexOutOfRange { index, n } => {
                write!(f, "index {index} out of range for {n} items")
            }
            Error::AlreadyMember(i) => write!(f, "item {i} is already in the set"),
            Error::Domain { index, value } => {
                write!(f, "coordinate {index} = {value} is outside its domain")
            }
            Error::TooLarge { n, cap } => {
                write!(f, "exhaustive enumeration over {n} items exceeds the cap of {cap}")
            }
            Error::NotPositiveDefinite => write!(f, "matrix is not positive definite"),
            Error::BudgetInfeasible { spent, budget } => {
                write!(f, "fractional point spends {spent} > budget {budget}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::NotAllocated(i) => write!(f, "item {i} is not allocated"),
            Error::Solver(e) => write!(f, "solver: {e}"),
        }
    }
}

impl core::error::Error for Error {}

impl From<SolverError> for Error {
    fn from(e: SolverError) -> Self {
        Error::Solver(e)
    }
}
