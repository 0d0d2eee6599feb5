use tcmpc_harness::HarnessError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for runtime I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Config(_) => 1,
            Self::Io(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => Self::Config(c.to_string()),
            HarnessError::Campaign(m) => Self::Config(m),
            other => Self::Io(other.to_string()),
        }
    }
}

impl From<tcmpc::ConfigError> for CliError {
    fn from(e: tcmpc::ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}
