use thiserror::Error;

/// Errors shared across the library.
///
/// Verdict-style outcomes (hypothesis failures, construction starvation) are
/// not errors; they are encoded in the return types of the operations that
/// produce them.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("mismatched inputs: {0}")]
    MismatchedInputs(String),

    #[error("non-finite entry at ({0}, {1})")]
    NonFiniteEntry(usize, usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
