use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum MmError {
    #[error("not a length space model: graph is disconnected ({reachable} of {total} vertices reachable from `{from}`)")]
    Disconnected {
        from: String,
        reachable: usize,
        total: usize,
    },

    #[error("edge {u} -- {v} has nonpositive length {len}")]
    BadEdgeLength { u: String, v: String, len: f64 },

    #[error("vertex `{id}` has negative weight {w}")]
    NegativeWeight { id: String, w: f64 },

    #[error("total measure must be positive, got {total}")]
    ZeroMeasure { total: f64 },

    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),

    #[error("edge references unknown vertex `{0}`")]
    EdgeUnknownVertex(String),

    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no threshold exists: C = {c} is not below sqrt(2)")]
    NoThreshold { c: f64 },

    #[error("restriction is not connected")]
    RestrictDisconnected,

    #[error("line arrangement convention failed: {0}")]
    LineConvention(String),

    #[error("vertex `{0}` is not a detected local cut point")]
    NotCutPoint(String),

    #[error("search budget exceeded ({0} correspondence pairs)")]
    BudgetExceeded(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MmError>;
