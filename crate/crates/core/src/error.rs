use thiserror::Error;

/// Errors produced by the simulator, the controller formats and the design
/// pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point ({x}, {y}) lies outside the arena")]
    OutOfArena { x: f64, y: f64 },
    #[error("invalid actuation: {0}")]
    InvalidActuation(String),
    #[error("could not place robots without overlap after {0} rejections")]
    PlacementInfeasible(usize),
    #[error("budget exhausted: requested {requested} episodes, {remaining} remaining")]
    BudgetExhausted { requested: u64, remaining: u64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
