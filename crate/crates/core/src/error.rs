use thiserror::Error;

/// Errors raised by the data generators, solvers and the experiment harness.
///
/// Column indices carried by variants are 1-based, matching every external
/// interface of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),

    #[error("p = {p} is not divisible by block size {block_size}")]
    InvalidBlockPartition { p: usize, block_size: usize },

    #[error("signal variance beta' Sigma beta is not positive")]
    DegenerateSignal,

    #[error("covariance matrix is not positive definite")]
    FactorizationFailure,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("missing value at line {line}, column {column}")]
    MissingValue { line: usize, column: usize },

    #[error("need at least {needed} columns, got {got}")]
    InsufficientColumns { needed: usize, got: usize },

    #[error("enumerating C({p}, {k}) = {count} supports exceeds the limit of {limit}")]
    InstanceTooLarge {
        p: usize,
        k: usize,
        count: u128,
        limit: u128,
    },

    #[error("no admissible candidate at forward step {step}: all remaining columns are collinear with the active set")]
    DegenerateCandidate { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
