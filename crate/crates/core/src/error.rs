use els_fhe::FheError;
use thiserror::Error;

use crate::depth::BindingConstraint;

#[derive(Debug, Error)]
pub enum ElsError {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("plan exceeds the parameter table ({constraint}): {detail}")]
    Capacity {
        constraint: BindingConstraint,
        detail: String,
    },
    #[error("data error: {0}")]
    Data(String),
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("unsupported plan: {0}")]
    UnsupportedPlan(String),
    #[error("backend error: {0}")]
    Backend(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Fhe(#[from] FheError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ElsError>;
