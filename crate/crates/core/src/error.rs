use thiserror::Error;

/// Errors raised by grid, envelope and subdifferential operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index:?} is out of bounds for grid shape {shape:?}")]
    OutOfBounds {
        index: Vec<usize>,
        shape: Vec<usize>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("effective domain is empty on the grid")]
    EmptyDomain,

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("invalid function: {0}")]
    InvalidSpec(String),

    #[error("size budget exceeded: {required} evaluations requested, budget is {budget}")]
    Budget { required: u128, budget: u128 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point {0:?} lies inside the grid boundary margin")]
    BoundaryMargin(Vec<f64>),

    #[error("projection at {point:?} has {count} minimizers, expected exactly one")]
    Ambiguous { point: Vec<f64>, count: usize },

    #[error("target misses the grid: {0}")]
    TargetOffGrid(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
