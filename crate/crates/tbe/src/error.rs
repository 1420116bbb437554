use std::path::PathBuf;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    /// A verification claim failed, or an error with no narrower code.
    pub const FAILURE: u8 = 1;
    /// The noise-floor check failed under `--strict`.
    pub const NOISE_FLOOR: u8 = 2;
    pub const IO: u8 = 3;
    /// Malformed or invalid input.
    pub const INVALID_INPUT: u8 = 4;
    pub const CAPACITY: u8 = 5;
    pub const USAGE: u8 = 6;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] tbe_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse(_) => exit::INVALID_INPUT,
            CliError::Core(tbe_core::Error::Capacity { .. }) => exit::CAPACITY,
            CliError::Core(tbe_core::Error::DegenerateEnsemble) => exit::FAILURE,
            CliError::Core(_) => exit::INVALID_INPUT,
            CliError::Usage(_) => exit::USAGE,
            CliError::Other(_) => exit::FAILURE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_file(path: &std::path::Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
