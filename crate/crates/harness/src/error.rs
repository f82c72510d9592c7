use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] bondvol::Error),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("minimization failed at iteration {iteration}: {reason}")]
    Minimize { iteration: usize, reason: String },
}

impl Error {
    /// Exit code of the CLI: 2 for an invalid config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
