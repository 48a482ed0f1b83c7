use std::path::PathBuf;

use thiserror::Error;

use crate::layout::Strategy;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column `{0}` not present in header")]
    MissingLabelColumn(String),

    /// `row` is the 1-based data row (header excluded).
    #[error("cannot parse `{value}` as a number at row {row}, column `{column}`")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset needs at least 2 samples, found {0}")]
    TooFewSamples(usize),

    #[error("dataset has no attribute columns")]
    NoAttributes,

    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    InvalidRatio(f64),

    #[error("split of {n} samples at ratio {ratio} leaves an empty side ({train} train)")]
    DegenerateSplit { n: usize, ratio: f64, train: usize },

    #[error("dataset still contains missing values")]
    MissingValues,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("correlation score at index {0} is not finite")]
    NonFiniteScore(usize),

    #[error("grid {m}x{n} is below the minimum supported by {strategy}")]
    UnsupportedDims {
        strategy: Strategy,
        m: usize,
        n: usize,
    },

    #[error("image {height}x{width} is smaller than a 3x3 kernel")]
    ImageTooSmall { height: usize, width: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value in tensor at flat index {0}")]
    NonFiniteValue(usize),

    #[error("invalid tensor file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
