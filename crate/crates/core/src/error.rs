//! Error type shared by every module in the crate.

/// Crate-wide error enum.
///
/// Variants map onto the CLI exit-code classes: configuration problems,
/// data/format problems, and numerical failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration value (bad dimension, batch size, threshold, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed runtime input (shape mismatch, label out of range, ...).
    #[error("input error: {0}")]
    Input(String),

    /// Two point sets compared by a transport distance have unequal sizes.
    #[error("alignment batch error: {0}")]
    AlignmentBatch(String),

    /// A computation produced a non-finite value or a factorization failed.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Mixture estimation failed (for example an empty class).
    #[error("estimation error: {0}")]
    Estimation(String),

    /// Pseudo-dataset rejection sampling exhausted its attempt budget.
    #[error("pseudo-generation error: {0}")]
    Generation(String),

    /// Text input could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Binary or structured file does not match its expected layout.
    #[error("format error: {0}")]
    Format(String),

    /// A brute-force oracle was asked for an instance above its size bound.
    #[error("oracle size error: {0}")]
    OracleSize(String),

    /// Input is degenerate for the requested operation (for example rank-0 data).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
