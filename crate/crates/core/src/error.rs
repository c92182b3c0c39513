use thiserror::Error;

/// Errors raised anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum CodError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("column `{0}` declared in schema is missing from the CSV header")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: expected a number, found {value:?}")]
    TypeMismatch {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: missing value")]
    MissingValue { row: usize, column: String },

    #[error("row {row}, label column `{column}`: expected 1, 0 or empty, found {value:?}")]
    InvalidLabel {
        row: usize,
        column: String,
        value: String,
    },

    #[error("dataset has no data rows")]
    EmptyDataset,

    #[error("dataset has no usable attributes")]
    NoAttributes,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("lower approximation of the whole universe is undefined (empty complement)")]
    EmptyComplement,

    #[error("conjunction of an empty list of relations")]
    EmptyList,

    #[error("index {index} out of range for universe of size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("numeric attribute requires a fuzzy radius")]
    MissingRadius,

    #[error("nominal attribute does not take a fuzzy radius")]
    UnexpectedRadius,

    #[error("fuzzy radius {0} outside [0, 1]")]
    RadiusOutOfRange(f64),

    #[error("every object is a labeled outlier; no candidate inliers remain")]
    NoUnlabeledObjects,

    #[error("radius optimization needs at least one positive and one negative object")]
    EmptyContext,

    #[error("decision system class `{0}` is empty")]
    EmptyClass(&'static str),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("threshold from labels requires at least one labeled outlier")]
    NoLabeledOutliers,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("truth vector must contain both classes")]
    DegenerateTruth,

    #[error("requested {requested} labeled outliers but the dataset has only {available}")]
    InsufficientOutliers { requested: usize, available: usize },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CodError>;
