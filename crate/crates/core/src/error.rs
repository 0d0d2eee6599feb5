use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OcpError {
    #[error("control sequence has {got} steps, horizon is {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("flat control vector of length {0} is not a multiple of 6")]
    FlatLength(usize),
    #[error("invalid problem: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid solver configuration: {0}")]
    Solver(String),
    #[error("invalid mission configuration: {0}")]
    Mission(String),
    #[error(transparent)]
    Problem(#[from] OcpError),
}
