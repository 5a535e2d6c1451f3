use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Domain(#[from] sbt::Error),

    #[error("{method}: simulation diverged: {source}")]
    Diverged { method: String, source: sbt::Error },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub const USAGE: i32 = 2;
    pub const DOMAIN: i32 = 3;
    pub const DIVERGED: i32 = 4;

    /// Parameter errors are usage errors; everything else is a domain error.
    pub fn from_param(e: sbt::Error) -> Self {
        match e {
            sbt::Error::Param(msg) => CliError::Usage(msg),
            other => CliError::Domain(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Domain(sbt::Error::Param(_)) => Self::USAGE,
            CliError::Domain(_) => Self::DOMAIN,
            CliError::Diverged { .. } => Self::DIVERGED,
            CliError::Io(_) => 1,
        }
    }
}
