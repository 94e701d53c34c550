//! Error taxonomy shared by every module. The CLI maps these onto process
//! exit codes, so the variant split mirrors that contract: configuration
//! and domain problems, I/O problems, and numeric failures.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or config validator rejected its inputs.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An argument fell outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structured data (checkpoint, dataset, feature block) did not have
    /// the shape the operation requires.
    #[error("structural error: {0}")]
    Structural(String),

    /// A metric is undefined on the given records (e.g. single-class AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// An iterative numeric routine ran out of iterations.
    #[error("{what} failed to converge after {iterations} iterations")]
    NonConvergence { what: String, iterations: usize },

    /// A gradient stopped being finite; carries the parameter group so the
    /// failing head or backbone is identifiable from the message alone.
    #[error("non-finite gradient in parameter group `{group}`")]
    NonFiniteGradient { group: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Serialization or parsing failure for on-disk artifacts.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
