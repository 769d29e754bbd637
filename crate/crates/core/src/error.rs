use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("quantizer training error: {0}")]
    Training(String),
    #[error("consistency error: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("identifiability violated: {users} users x {unknowns_per_user} unknowns exceed {antennas} antennas x {measurements_per_antenna} measurements")]
    Identifiability {
        users: usize,
        antennas: usize,
        unknowns_per_user: usize,
        measurements_per_antenna: usize,
    },
    #[error("invalid config key `{key}`: {reason}")]
    InvalidKey { key: String, reason: String },
    #[error("missing required config key `{0}`")]
    MissingKey(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write or read {path}: {msg}")]
    Output { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(expected: impl ToString, got: impl ToString) -> Self {
        Error::Dimension {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
