use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows")]
    NoRows,
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("unparseable numeric cell {value:?} at row {row}, column {column}")]
    NotNumeric {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error("column {0:?} not found")]
    ColumnNotFound(String),
    #[error("column {0:?} is numeric, expected categorical")]
    ColumnNotCategorical(String),
    #[error("column {0:?} is categorical, expected numeric")]
    ColumnNotNumeric(String),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("split of {samples} samples leaves an empty partition")]
    EmptyPartition { samples: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("GCV undefined: effective parameters exceed sample count ({params} >= {samples})")]
    GcvUndefined { params: f64, samples: usize },
    #[error("non-finite entries in least-squares input")]
    NonFiniteInput,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid reshape: {0}")]
    InvalidReshape(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("subsample of {requested} rows requested but only {available} available")]
    SubsampleTooLarge { requested: usize, available: usize },
    #[error("need >= 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from bad input rather than a numeric or
    /// runtime failure. The CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Diverged { .. } | Error::NonFiniteInput | Error::GcvUndefined { .. })
            && !matches!(self, Error::Io { source, .. } if source.kind() != std::io::ErrorKind::NotFound)
    }
}
