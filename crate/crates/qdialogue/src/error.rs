use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    /// A projective family does not span the measured state.
    #[error("incomplete measurement family: total probability {0} < 1")]
    IncompleteFamily(f64),

    /// An operation was called in the wrong round mode (MM vs CM).
    #[error("mode violation: {0}")]
    ModeViolation(String),

    /// A party tried to act on qubits it does not hold.
    #[error("possession violation: {0}")]
    PossessionViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
