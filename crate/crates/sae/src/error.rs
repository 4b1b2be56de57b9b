//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while fitting, estimating, or simulating.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The dataset violates a structural precondition (sizes, signs, finiteness).
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    /// The design matrix is rank-deficient (Cholesky pivot below tolerance).
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// The moment-equation solver could not locate a root to tolerance.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// A kurtosis estimate is undefined (zero variance denominator).
    #[error("undefined kurtosis: {0}")]
    UndefinedKurtosis(String),

    /// A relative summary is undefined because the reference value is zero.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// An operation was invoked with incompatible options.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Too many replicates failed for the study to be trustworthy.
    #[error("study aborted: {0}")]
    StudyAborted(String),

    /// A file could not be parsed; the message names the offending row.
    #[error("parse error: {0}")]
    Parse(String),

    /// Underlying I/O failure.
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
