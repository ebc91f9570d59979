use std::fmt;

use ocn::OcnError;

/// Command failure, carrying the process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Exit code 1.
    Config(String),
    /// Exit code 2.
    Runtime(anyhow::Error),
    /// Exit code 3: an oracle cross-check failed under `--verify`.
    Verify(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Runtime(_) => 2,
            Failure::Verify(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Runtime(e) => write!(f, "runtime error: {e:#}"),
            Failure::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<OcnError> for Failure {
    fn from(e: OcnError) -> Self {
        match e {
            OcnError::Config(m) | OcnError::Unsupported(m) => Failure::Config(m),
            OcnError::Contract(m) => Failure::Verify(m),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}
