use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pose ({x}, {y}): outside the {width_m} x {height_m} m map")]
    InvalidPose { x: f64, y: f64, width_m: f64, height_m: f64 },

    #[error("arity mismatch for {what}: expected {expected}, got {got}")]
    Arity { what: &'static str, expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("level generation failed: {0}")]
    Generation(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("undefined score: {0}")]
    UndefinedScore(&'static str),

    #[error("level buffer is empty")]
    EmptyBuffer,

    #[error("numerical failure: {stat} = {value}")]
    Numerical { stat: String, value: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint incompatible with environment: {0}")]
    Compatibility(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
