use thiserror::Error;

/// Errors produced by the fusion pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid depth measurement: {0}")]
    InvalidMeasurement(String),
    #[error("point lies behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("calibration target not found: {0}")]
    TargetNotFound(String),
    #[error("underdetermined: need at least {needed} observations, got {got}")]
    Underdetermined { needed: usize, got: usize },
    #[error("observation {index} lies behind the IR camera after transform")]
    DegenerateObservation { index: usize },
    #[error("empty footprint")]
    EmptyFootprint,
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid downsample: {0}")]
    InvalidDownsample(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no valid pixels to compute statistics over")]
    EmptyStatistics,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse_at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    pub(crate) fn parse_at_offset(offset: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            location: format!("byte offset {offset}"),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
