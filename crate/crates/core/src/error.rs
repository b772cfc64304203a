use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("missing column `{column}`")]
    MissingColumn { column: String },

    #[error("unknown column `{column}`")]
    UnknownColumn { column: String },

    #[error("row {row}, column `{column}`: `{value}` is not numeric")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rating {value} is outside the table domain for `{attribute}`")]
    RatingOutOfDomain { attribute: String, value: i64 },

    #[error("calibration underdetermined")]
    CalibrationUnderdetermined,

    #[error("collinear predictors")]
    CollinearPredictors,

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("series `{repo}` has {len} months, need at least {needed}")]
    SeriesTooShort {
        repo: String,
        len: usize,
        needed: usize,
    },

    #[error("non-contiguous months: {prev} is followed by {next}")]
    NonContiguousMonths { prev: String, next: String },

    #[error("malformed fixture: {0}")]
    Fixture(String),

    #[error("treatment {treatment} is not admissible on dataset `{dataset}` ({provenance})")]
    Inadmissible {
        treatment: String,
        dataset: String,
        provenance: String,
    },

    #[error("experiment config: {0}")]
    Config(String),

    #[error("rate limit exceeded for {url}")]
    RateLimited { url: String },

    #[error("repository not found: {0}")]
    RepoNotFound(String),

    #[error("authentication failed: {0}")]
    AuthFailure(String),

    #[error("http: {0}")]
    Http(String),

    #[error("cache miss for {0} and network access is disabled")]
    CacheMiss(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors raised while talking to the hosting service.
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            Error::RateLimited { .. }
                | Error::RepoNotFound(_)
                | Error::AuthFailure(_)
                | Error::Http(_)
                | Error::CacheMiss(_)
        )
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}
