use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GrmlrError>;

#[derive(Debug, Error)]
pub enum GrmlrError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{file}: site `{site}` has no matching row in {other}")]
    MissingSite { file: String, site: String, other: String },

    #[error("{file}: row `{site}` sums to {sum}, expected 1 (tolerance 1e-6)")]
    RowSumViolation { file: String, site: String, sum: f64 },

    #[error("{file}: row `{site}` column `{column}` holds negative abundance {value}")]
    NegativeAbundance {
        file: String,
        site: String,
        column: String,
        value: f64,
    },

    #[error("{file}: row `{site}` column `{column}` is not a non-negative integer count: `{value}`")]
    NegativeCount {
        file: String,
        site: String,
        column: String,
        value: String,
    },

    #[error("{file}: row `{site}` has unknown stage `{label}` (expected one of {expected:?})")]
    UnknownLabel {
        file: String,
        site: String,
        label: String,
        expected: Vec<String>,
    },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("inputs are not site-aligned: {0}")]
    Misalignment(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix `{0}` is not symmetric, non-negative, and zero-diagonal")]
    AsymmetricInput(&'static str),

    #[error("taxa mismatch: missing {missing:?}, extra {extra:?}")]
    TaxaMismatch { missing: Vec<String>, extra: Vec<String> },

    #[error("dataset has no stage labels")]
    MissingLabels,

    #[error("alpha > 0 requires macrofauna counts")]
    MissingMacrofauna,

    #[error("class `{0}` has no samples")]
    EmptyClass(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("invalid value for `{key}`: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl GrmlrError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GrmlrError::Io {
            path: path.into(),
            source,
        }
    }
}
