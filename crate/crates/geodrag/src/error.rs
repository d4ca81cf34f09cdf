//! Crate-wide error type.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("patch of radius {radius} at ({x:.3}, {y:.3}) out of bounds for {width}x{height} grid")]
    PatchOutOfBounds {
        x: f64,
        y: f64,
        radius: usize,
        width: usize,
        height: usize,
    },

    #[error("point ({x:.4}, {y:.4}, {z:.4}) at or behind the camera plane")]
    BehindCamera { x: f64, y: f64, z: f64 },

    #[error("projected point ({u:.3}, {v:.3}) outside {width}x{height} image bounds")]
    OutsideImage {
        u: f64,
        v: f64,
        width: usize,
        height: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("zero-norm feature vector at ({x:.2}, {y:.2})")]
    ZeroNormFeature { x: f64, y: f64 },

    #[error("external command failed: {0}")]
    External(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
