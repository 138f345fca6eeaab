use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid experiment, split or model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called on inputs that violate its preconditions.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A theorem's stated hypothesis does not hold for the given inputs.
    #[error("theorem assumption violated: {0}")]
    Assumption(String),

    /// A closed-form expression is singular at the given inputs (e.g. alpha in {0, 1}).
    #[error("singular input: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("linear system could not be solved: {0}")]
    Solve(String),

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("bootstrap unreliable: {undefined} of {total} resamples undefined")]
    Unreliable { undefined: usize, total: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
