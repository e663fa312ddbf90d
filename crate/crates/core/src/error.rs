use thiserror::Error;

/// Errors produced by the hypergraphon toolkit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("arity must be at least 1")]
    ZeroArity,

    #[error("arity {0} is too large (at most {max} supported)", max = crate::subsets::MAX_ARITY)]
    ArityTooLarge(usize),

    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: usize, right: usize },

    #[error("expected {expected} cells, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid edge: {0}")]
    InvalidEdge(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("target hypergraph has no vertices")]
    EmptyTarget,

    #[error("work bound exceeded: {work} > {bound}{}", .index.map(|i| format!(" at enumeration index {i}")).unwrap_or_default())]
    WorkBound {
        work: u128,
        bound: u128,
        index: Option<u64>,
    },

    #[error("{what} cap exceeded (cap {cap}){}", .detail.as_ref().map(|d| format!(": {d}")).unwrap_or_default())]
    CapExceeded {
        what: &'static str,
        cap: u128,
        detail: Option<String>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
