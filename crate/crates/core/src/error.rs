use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("parameters outside the supported regime: {0}")]
    Regime(String),

    #[error("finite chain of {cells} cells exceeds the {mode} limit of {limit}")]
    Capacity {
        mode: &'static str,
        cells: usize,
        limit: usize,
    },

    #[error("observable `{observable}` = {value} violates its bounds at {context}")]
    BoundViolation {
        observable: String,
        value: f64,
        context: String,
    },

    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn require_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {value}")))
    }
}
