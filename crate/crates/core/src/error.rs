use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dimension {d} exceeds the cap of {cap} for {what}")]
    DimensionCap { d: usize, cap: usize, what: &'static str },

    #[error("invalid vertex: {0}")]
    InvalidVertex(String),

    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("invalid probability {value} for coordinate {index}: must lie strictly inside (0, 1)")]
    InvalidProbability { index: usize, value: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// A run-start inequality failed; the message names it.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("value {value} at vertex {vertex} is not a multiple of delta = {delta}")]
    OffGrid { vertex: String, value: f64, delta: f64 },

    #[error("function range does not match tester mode: {0}")]
    RangeMismatch(String),

    #[error("edge {0} is not violated")]
    NotViolated(String),

    #[error("partial assignment is not Lipschitz on its support: {0}")]
    PartialNotLipschitz(String),

    #[error("repair did not reach a fixpoint within {passes} passes")]
    NonTermination { passes: usize },

    #[error("unknown output `{0}`")]
    UnknownOutput(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }
}
