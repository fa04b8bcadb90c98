use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::PointId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 1, 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("position {0:?} lies outside the window")]
    OutsideWindow(Vec<f64>),

    #[error("a point already occupies position {0:?}")]
    DuplicatePosition(Vec<f64>),

    #[error("no point with id {0}")]
    InvalidPointId(PointId),

    #[error("mark presence does not match the configuration")]
    MarkMismatch,

    #[error("insertion ratio undefined: hard-core conflict (papangelou intensity is zero)")]
    HardCoreConflict,

    #[error("potential is singular at distance zero")]
    SingularPotential,

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("window side {side} is not divisible by cell side {cell}")]
    NotDivisible { side: f64, cell: f64 },

    #[error("truncation bound violated: tail mass bound {bound:e} exceeds tolerance {tolerance:e}")]
    TruncationBound { bound: f64, tolerance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed sample file {path}: {reason}")]
    SampleFormat { path: PathBuf, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("manifest problem in {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
