use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient distinct values: need {needed}, found {found}")]
    InsufficientDistinctValues { needed: usize, found: usize },

    #[error("empty symbol table")]
    EmptySymbolTable,

    #[error("codeword length {0} exceeds the 64-bit limit")]
    CodewordTooLong(usize),

    #[error("symbol {0} is not in the code")]
    UnknownSymbol(f32),

    #[error("corrupt stream at bit {bit}: {reason}")]
    CorruptStream { bit: u64, reason: String },

    #[error("corrupt container at byte {offset}: {reason}")]
    CorruptContainer { offset: u64, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Corruption of persisted or streamed data, as opposed to caller misuse.
    pub fn is_corruption(&self) -> bool {
        matches!(self, Error::CorruptStream { .. } | Error::CorruptContainer { .. })
    }
}
