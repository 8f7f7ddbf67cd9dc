use thiserror::Error;

/// Errors surfaced by graph loading, estimation, and bound evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed edge-list input, with 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Edge list contained no usable edges.
    #[error("empty graph: no edges after dropping self-loops and duplicates")]
    EmptyGraph,

    /// Operation needs at least two nodes (or is otherwise meaningless here).
    #[error("degenerate graph: {0}")]
    DegenerateGraph(String),

    /// A numeric argument was outside its documented domain.
    #[error("parameter out of domain: {0}")]
    Parameter(String),

    /// An internal consistency check failed on caller-supplied data.
    #[error("integrity violation: {0}")]
    Integrity(String),

    /// Wall-clock budget ran out before the operation could finish.
    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
