use thiserror::Error;

/// Errors produced by model construction, sampling, and diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an inconsistent configuration (dimension mismatch,
    /// out-of-range parameter, incompatible sampler/model pairing).
    #[error("configuration error: {0}")]
    Config(String),

    /// A density or gradient evaluation produced a non-finite value where
    /// one is not permitted. Carries the offending coordinate index.
    #[error("evaluation error at coordinate {coord}: {message}")]
    Eval { coord: usize, message: String },

    /// A data file could not be parsed. Line numbers are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Step-size initialization failed to terminate.
    #[error("step-size initialization error: {0}")]
    Init(String),

    /// Proposal-scale tuning failed (for example, no bracket found).
    #[error("tuning error: {0}")]
    Tuning(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
