use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis index must be >= 1, got {0}")]
    InvalidIndex(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),
    #[error("coefficient budget exceeded: requested {requested}, available {available}")]
    Budget { requested: usize, available: usize },
    #[error("horizon n = {n} too small, need n >= {min}")]
    HorizonTooSmall { n: usize, min: usize },
    #[error("insufficient coefficients: have {have}, need {need}")]
    InsufficientCoefficients { have: usize, need: usize },
    #[error("signal capability missing: {0}")]
    Capability(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
