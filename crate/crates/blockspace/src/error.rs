use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("spot `{0}` in the coordinate file is not a matrix column")]
    UnknownSpotId(String),
    #[error("no coordinates for spot `{0}`")]
    MissingCoordinate(String),
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] blockspace_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit status: 1 usage, 2 parse or invalid input, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        use blockspace_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Usage(_) => 1,
            CliError::Parse { .. } | CliError::UnknownSpotId(_) | CliError::MissingCoordinate(_) | CliError::Config { .. } => 2,
            CliError::Model(e) => match e {
                E::InvalidDataset(_)
                | E::DimensionMismatch(_)
                | E::InvalidLabels(_)
                | E::InvalidParameter(_)
                | E::ConfigInvalid(_)
                | E::LengthMismatch(..)
                | E::TooShort
                | E::InvalidLevel(_)
                | E::EmptyGrid => 2,
                _ => 3,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "usage",
            2 => "parse",
            _ => "numeric",
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
