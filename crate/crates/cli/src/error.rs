use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Core(#[from] rtmix_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use rtmix_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::Config(_) | E::Domain { .. } | E::MalformedProfile(_) | E::Csv(_)) => EXIT_CONFIG,
            CliError::Check(_) | CliError::Core(_) | CliError::Io { .. } => EXIT_CHECK_FAILED,
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
