use std::path::Path;

/// Failure categories; each maps to its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("io error: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

impl From<gmp_core::Error> for CliError {
    fn from(e: gmp_core::Error) -> Self {
        use gmp_core::Error as E;
        let msg = e.to_string();
        match e {
            E::Config(_) | E::UnknownHead(_) | E::Dimension { .. } => CliError::Config(msg),
            E::Divergence { .. } | E::Shape { .. } => CliError::Training(msg),
            _ => CliError::Data(msg),
        }
    }
}
