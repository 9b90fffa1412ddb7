use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or invalid input; exit status 2.
    #[error("{0}")]
    Parse(String),

    /// An oracle cross-check exceeded its tolerance; exit status 3.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Model(#[from] hma_ee::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Verification(_) => 3,
            _ => 1,
        }
    }
}
