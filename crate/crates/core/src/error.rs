use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // configuration
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // ingestion
    #[error("{path}:{line}: parse error: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}:{line}: bad color {value:?}")]
    BadColor { path: String, line: usize, value: String },
    #[error("subject {subject:?} is missing letter {letter:?}")]
    MissingLetter { subject: String, letter: char },
    #[error("subject {subject:?} has duplicate letter {letter:?}")]
    DuplicateLetter { subject: String, letter: char },
    #[error("{path}:{line}: expected {expected} dimensions, found {found}")]
    DimensionMismatch { path: String, line: usize, expected: usize, found: usize },
    #[error("vector for {0:?} has zero norm")]
    ZeroVector(char),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    // computation
    #[error("alphabets do not match")]
    AlphabetMismatch,
    #[error("empty input")]
    EmptyInput,
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
    #[error("exact cut norm limited to {max} rows, got {rows}")]
    TooLarge { rows: usize, max: usize },
    #[error("negative edge length {length} between {from:?} and {to:?}")]
    NegativeEdge { from: char, to: char, length: f64 },
    #[error("vector has zero variance")]
    ConstantVector,
    #[error("k = {k} exceeds the {available} available pairs")]
    KTooLarge { k: usize, available: usize },
    #[error("cannot place {groups} colors {separation} apart inside the sRGB gamut")]
    InfeasibleSeparation { groups: usize, separation: f64 },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 ingestion, 4 computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::Parse { .. }
            | Error::BadColor { .. }
            | Error::MissingLetter { .. }
            | Error::DuplicateLetter { .. }
            | Error::DimensionMismatch { .. }
            | Error::ZeroVector(_)
            | Error::Io { .. } => 3,
            _ => 4,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
