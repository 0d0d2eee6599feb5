use std::path::PathBuf;

use tcmpc::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid campaign: {0}")]
    Campaign(String),
    #[error("cannot summarize an empty set of trials")]
    NoRecords,
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure came from the file system rather than from the
    /// configuration or the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Self::Io { .. } | Self::Csv { .. } | Self::Json { .. })
    }
}
