use thiserror::Error;

use crate::itemset::ItemSet;

#[derive(Debug, Error)]
pub enum SsmError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The instance is too large for the exact method requested.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Malformed or incomplete input.
    #[error("invalid input: {0}")]
    Input(String),

    /// Input parsed fine but cannot come from a stochastic set model.
    #[error("input inconsistent with a stochastic set model: {0}")]
    Inconsistent(String),

    #[error("observation ({assortment}, {choice}) has zero probability under every support set")]
    Coverage { assortment: ItemSet, choice: usize },

    #[error("degenerate dual: fitted probability of ({assortment}, {choice}) is zero but it was observed")]
    DegenerateDual { assortment: ItemSet, choice: usize },

    #[error("dual inconsistency: column {column} already in the support priced at {value}")]
    DualInconsistency { column: ItemSet, value: f64 },

    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("MILP backend failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SsmError>;
