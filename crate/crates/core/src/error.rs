use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variant names double as the stable error names printed by the CLI, see
/// [`Error::name`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("record {0} has no five-tuple identity")]
    MissingIdentity(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: requested {requested}, available {available}")]
    InsufficientData { requested: usize, available: usize },

    #[error("cannot summarize an empty flow group")]
    EmptyGroup,

    #[error("cannot resolve feature `{feature}`: {reason}")]
    FeatureResolution { feature: String, reason: String },

    #[error("feature `{feature}` row {row}: value {value} is outside the transform domain")]
    TransformDomain { feature: String, row: usize, value: f64 },

    #[error("negative matrix entry {value} at ({row}, {col})")]
    NonNegativityViolation { row: usize, col: usize, value: f64 },

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("solver did not converge after {iterations} iterations (KKT residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("incompatible model: {0}")]
    IncompatibleModel(String),

    #[error("deserialization failed: {0}")]
    Deserialization(String),

    #[error("verdicts and ground truth are misaligned: {0}")]
    Alignment(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier for the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::Parse { .. } => "ParseError",
            Error::EmptyInput(_) => "EmptyInput",
            Error::MissingIdentity(_) => "MissingIdentity",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::EmptyGroup => "EmptyGroup",
            Error::FeatureResolution { .. } => "FeatureResolutionError",
            Error::TransformDomain { .. } => "TransformDomainError",
            Error::NonNegativityViolation { .. } => "NonNegativityViolation",
            Error::UnknownVertex(_) => "UnknownVertex",
            Error::Dimension { .. } => "DimensionError",
            Error::ConvergenceFailure { .. } => "ConvergenceFailure",
            Error::IncompatibleModel(_) => "IncompatibleModel",
            Error::Deserialization(_) => "DeserializationError",
            Error::Alignment(_) => "AlignmentError",
            Error::InvariantViolation(_) => "InvariantViolation",
            Error::Config(_) => "ConfigError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
