use thiserror::Error;

use crate::matrixlab::RankReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("data not informative: {reason}")]
    NotInformative {
        reason: String,
        rank: Option<RankReport>,
    },

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("plant oracle: {0}")]
    Oracle(String),

    #[error("online design did not terminate within {0} steps")]
    StepLimit(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
