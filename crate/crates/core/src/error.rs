use thiserror::Error;

#[derive(Debug, Error)]
pub enum OcnError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("structural error: {0}")]
    Structure(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = OcnError> = std::result::Result<T, E>;

impl OcnError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn structure(msg: impl Into<String>) -> Self {
        Self::Structure(msg.into())
    }
}
