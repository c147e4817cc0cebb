use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tridiagonal eigen-solve did not converge for n = {n}")]
    EigenNoConvergence { n: usize },

    #[error("double factorial for moment k = {k} overflows f64")]
    MomentOverflow { k: usize },

    #[error("index set with d = {d}, L = {level} would exceed the size cap of {cap} indices")]
    IndexSetTooLarge { d: usize, level: usize, cap: usize },

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("integrand returned a non-finite value {value} at node {node:?}")]
    IntegrandFailure { node: Vec<f64>, value: f64 },

    #[error("unsupported smoothness alpha = {0} (closed-form kernel exists for alpha in {{1, 2}})")]
    UnsupportedAlpha(u32),

    #[error("N = {0} is not prime")]
    CompositeModulus(u64),

    #[error("digit overflow: {rows} output digits exceed the 64-digit word")]
    DigitOverflow { rows: usize },

    #[error("direction numbers, line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unknown integrand `{0}`")]
    UnknownIntegrand(String),

    #[error("integrand `{0}` has no exact value")]
    NoExactValue(String),

    #[error("rate fit needs at least 4 usable records, got {0}")]
    TooFewRecords(usize),

    #[error("malformed {what}: {msg}")]
    Malformed { what: String, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
