//! Error types shared by every module in the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {dim} outside supported range 1..={limit}")]
    DimensionBounds { dim: usize, limit: usize },

    #[error("vector has norm {norm}, expected a unit vector")]
    NotNormalized { norm: f64 },

    #[error("span contains no vector of usable norm")]
    DegenerateSpan,

    #[error("operator is not a projector: {reason}")]
    NotProjector { reason: String },

    #[error("invalid measurement family: {reason}")]
    InvalidMeasurement { reason: String },

    #[error("pointer basis does not align with the projector range (defect {defect:.3e})")]
    PointerBasis { defect: f64 },

    #[error("outcome has probability {probability:.3e}, below the zero-probability threshold")]
    ZeroProbabilityOutcome { probability: f64 },

    #[error("unknown outcome label {label:?}")]
    UnknownLabel { label: String },

    #[error("post-selection has total probability {total:.3e}; conditioning is undefined")]
    PostselectionImpossible { total: f64 },

    #[error("box index {index} out of range {min}..={max}")]
    IndexOutOfRange { index: usize, min: usize, max: usize },

    #[error("not enough post-selected trials to estimate from")]
    InsufficientData,

    #[error("parse error: {message}")]
    Parse { message: String },

    #[error("validation error at `{path}`: {message}")]
    Validation { path: String, message: String },

    #[error("query `{query}`: {source}")]
    Query {
        query: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps a domain error with the query it occurred under.
    pub fn in_query(self, query: impl Into<String>) -> Self {
        Error::Query {
            query: query.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
