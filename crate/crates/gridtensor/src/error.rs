use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{origin}, line {line}: {message}")]
    Parse {
        origin: String,
        line: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },

    #[error("{0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] gridtensor_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for usage and configuration problems, 2 for bad input data or
    /// artifacts, 3 for numerical or solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Usage(_) | Error::Config(_) => 1,
            Error::Io { .. } | Error::Parse { .. } | Error::Artifact { .. } | Error::Data(_) => 2,
            Error::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &gridtensor_core::Error) -> u8 {
    use gridtensor_core::Error as E;
    match e {
        E::InvalidRank(_) | E::InvalidOption(_) | E::Unsatisfiable(_) => 1,
        E::NonPositiveRate(_) | E::InvalidRate(_) | E::Degenerate(_) => 3,
        E::AtRank { source, .. } | E::AtRecord { source, .. } => core_exit_code(source),
        _ => 2,
    }
}
