use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("symbolic horizon exceeded: need {needed} symbols, point carries {available}")]
    Horizon { needed: usize, available: usize },

    #[error("point type mismatch: {0}")]
    PointType(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("incompatible inputs: {0}")]
    Incompatible(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
