use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unreadable file {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },

    #[error("unsupported format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("zero-dimension image")]
    ZeroDimension,

    #[error("unwritable path {path}: {reason}")]
    UnwritablePath { path: PathBuf, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("empty density")]
    EmptyDensity,

    #[error("plate fully eroded")]
    PlateFullyEroded,

    #[error("mesh is not watertight")]
    NotWatertight,

    #[error("geometry error: {0}")]
    Geometry(String),
}
