use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arity {0}: trees need at least 2 children per node")]
    InvalidArity(usize),

    /// A computation would exceed a configured size cap.
    #[error("{what}: requested {requested} exceeds the cap of {cap}")]
    Budget {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error("malformed Polish code: prefix condition fails at position {index}")]
    MalformedCode { index: usize },

    #[error("leaf count mismatch: tree has {expected} leaves, got {got} lattice vectors")]
    LeafCountMismatch { expected: usize, got: usize },

    #[error("zero frequency where a nonzero one is required")]
    ZeroFrequency,

    /// Initial datum too large for the Picard series to be controlled.
    #[error("smallness gate failed: datum norm {norm} is not below the threshold {threshold}")]
    Threshold { norm: f64, threshold: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two independent computations of the same quantity disagree.
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("configuration error at `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("acceptance check failed: {0}")]
    Acceptance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for budgets, 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Budget { .. } => 3,
            Error::Acceptance(_) | Error::Inconsistent(_) => 4,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn budget(what: &'static str, requested: u128, cap: u128) -> Self {
        Error::Budget {
            what,
            requested,
            cap,
        }
    }
}
