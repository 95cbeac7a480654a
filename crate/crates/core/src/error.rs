//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("raster geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid robot or scene specification: {0}")]
    InvalidSpec(String),

    #[error("degenerate camera: view transform not invertible")]
    DegenerateCamera,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("not enough nodes: need at least {needed}, got {got}")]
    InsufficientNodes { needed: usize, got: usize },

    #[error("metric {metric} unsupported for this dataset: {reason}")]
    UnsupportedMetric { metric: String, reason: String },

    #[error("query pose '{which}' is in collision")]
    QueryInCollision { which: String },

    #[error("query pose '{which}' could not be connected to any free node")]
    IsolatedQuery { which: String },

    #[error("node {0} has no diagnostic configuration")]
    MissingConfiguration(usize),

    #[error("local chart needs at least 2 members, got {0}")]
    ChartTooSmall(usize),

    #[error("planner {planner} unsupported for this dataset: {reason}")]
    UnsupportedPlanner { planner: String, reason: String },

    #[error("manifest parse error at line {line}: {msg}")]
    ManifestParse { line: usize, msg: String },

    #[error("scene file error: {0}")]
    SceneParse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("image file error: {0}")]
    ImageFile(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
