use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("position {value} lies outside the admissible range {range}")]
    OutOfDomain { value: f64, range: String },

    #[error("quadrature did not converge for {what}: last two estimates {previous:e} and {current:e}")]
    NoConvergence { what: String, previous: f64, current: f64 },

    #[error("incompatible operands: {0}")]
    Mismatch(String),

    #[error("state is not usable here: {0}")]
    InvalidState(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
