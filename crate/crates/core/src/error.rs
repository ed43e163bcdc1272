use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid hierarchy: {0}")]
    Hierarchy(String),

    /// First offending cell found by a row-major scan, 0-based.
    #[error("outcome matrix invalid at ({row}, {col}): {reason}")]
    InvalidMatrix { row: usize, col: usize, reason: String },

    #[error("degenerate design: both arms need at least one patient (m = {m}, n = {n})")]
    DegenerateDesign { m: usize, n: usize },

    #[error("{what} enumeration needs {size} terms, which exceeds the guard of {guard}")]
    GuardExceeded {
        what: &'static str,
        size: u128,
        guard: u128,
    },

    #[error("win ratio undefined: treatment wins = {wins_t}, control wins = {wins_c}")]
    RatioUndefined { wins_t: u64, wins_c: u64 },
}
