use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("joint state space has {size} configurations, above the cap of {cap}")]
    StateSpaceTooLarge { size: u128, cap: usize },

    #[error("no value assigned to parameter slot `{0}`")]
    UnassignedSlot(String),

    #[error("invalid parameter value: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown task `{0}`")]
    UnknownTask(String),

    #[error("task `{0}` has no calibrated misclassification probabilities")]
    Uncalibrated(String),

    #[error("observed evidence has zero probability under the current belief")]
    ZeroMass,

    #[error("non-finite weight encountered: {0}")]
    NonFinite(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("moment matching undefined: {0}")]
    MomentMatch(String),

    #[error("degenerate draws for `{0}`: zero variance")]
    DegenerateChain(String),

    #[error("missing summary for `{0}`")]
    MissingSummary(String),

    #[error("feature matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },

    #[error("no eligible item remains in the pool")]
    NoEligibleItem,

    #[error("responder failed: {0}")]
    Responder(String),

    #[error("schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("file has no `version` field")]
    MissingVersion,

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("{}: {error}", path.display())]
    File {
        path: std::path::PathBuf,
        error: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure stems from bad input rather than a numerical or
    /// internal problem.
    pub fn is_user_error(&self) -> bool {
        if let Error::File { error, .. } = self {
            return error.is_user_error();
        }
        !matches!(
            self,
            Error::ZeroMass | Error::NonFinite(_) | Error::DegenerateChain(_)
        )
    }
}

/// Attaches `path` to any error produced by `f`.
pub(crate) fn at_path<T>(path: &std::path::Path, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| match e {
        Error::File { .. } => e,
        e => Error::File {
            path: path.to_path_buf(),
            error: Box::new(e),
        },
    })
}
