use std::path::PathBuf;

/// Errors raised while configuring, running or replaying recipes.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] mer_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("replay differs: {0}")]
    ReplayMismatch(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Exit status for a failure: 2 for configuration problems, 3 for numeric
/// ones, 1 otherwise.
pub fn exit_code(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Config(_) => 2,
        HarnessError::Model(e) => match e {
            mer_core::Error::Invalid { .. } | mer_core::Error::Parse { .. } => 2,
            mer_core::Error::Io { .. } => 1,
            _ => 3,
        },
        HarnessError::ReplayMismatch(_) => 3,
        HarnessError::Io { .. } => 1,
    }
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config(msg.into())
    }
}
