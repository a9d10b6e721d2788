use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid or incomplete configuration, unreadable inputs.
    #[error("configuration error: {0}")]
    Config(String),

    /// An estimator or decomposition failed on the given data.
    #[error("numerical failure: {0}")]
    Numerical(bandchol::Error),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("all {count} simulation cells failed; first failure: {first}")]
    AllCellsFailed { count: usize, first: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io { .. } => 3,
            CliError::AllCellsFailed { .. } => 4,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<bandchol::Error> for CliError {
    fn from(e: bandchol::Error) -> Self {
        use bandchol::Error as E;
        match e {
            E::InvalidParameter(_) | E::OutOfRange(_) | E::Parse(_) => CliError::Config(e.to_string()),
            e => CliError::Numerical(e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
