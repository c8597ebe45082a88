use thiserror::Error;

/// Errors raised across the crate. Messages carry the offending values.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("order {order} exceeds the supported range |n| <= {max}")]
    OrderTooLarge { order: i64, max: i64 },
    #[error("overflow evaluating order {order} at argument {argument}")]
    Overflow { order: i64, argument: f64 },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid direction: |d| = {0}")]
    InvalidDirection(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("consistency failure: {0}")]
    Consistency(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
