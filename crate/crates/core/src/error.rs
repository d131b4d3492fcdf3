use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("frequency {freq_hz} Hz outside table span [{lo_hz}, {hi_hz}] Hz")]
    OutOfRange { freq_hz: f64, lo_hz: f64, hi_hz: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not Hermitian (relative asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the CLI: 2 config, 3 I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } | Error::Domain(_) => 2,
            Error::Io { .. } => 3,
            Error::OutOfRange { .. } | Error::Degenerate(_) | Error::NotHermitian(_) | Error::Numerical(_) => 4,
        }
    }
}
