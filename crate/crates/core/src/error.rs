use thiserror::Error;

use crate::algorithms::RunResult;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),

    #[error("infeasible oracle structure: {0}")]
    InfeasibleStructure(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("non-termination guard tripped in {routine} after {steps} steps")]
    NonTermination { routine: &'static str, steps: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown arm id {0}")]
    UnknownArm(usize),

    #[error("maximum number of rounds ({max_rounds}) exceeded")]
    MaxRoundsExceeded {
        max_rounds: usize,
        partial: Box<RunResult>,
    },

    #[error("maximum number of samples ({max_samples}) exceeded")]
    MaxSamplesExceeded {
        max_samples: u64,
        partial: Box<RunResult>,
    },

    #[error("budget {budget} is too small: need at least {required}")]
    BudgetTooSmall { budget: u64, required: u64 },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
