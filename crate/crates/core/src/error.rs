use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate instance: numerical rank {rank} < required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("enumeration budget exceeded: C(M,K) = {count} > budget {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
