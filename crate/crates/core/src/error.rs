use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("channel matrix is not square ({rows}x{cols}); use the direct rate evaluator instead of the canonical form")]
    NonSquare { rows: usize, cols: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("enumeration budget exceeded: need {required}, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}
