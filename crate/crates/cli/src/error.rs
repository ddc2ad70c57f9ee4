use ergo_core::ErgoError;

/// Everything a command can fail with. Each variant, and each core error
/// class inside `Compute`, maps to its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown reference: {0}")]
    UnknownReference(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error(transparent)]
    Compute(#[from] ErgoError),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// Process exit code; 0 is reserved for success.
    ///
    /// | code | class |
    /// |------|-------|
    /// | 2 | usage |
    /// | 3 | i/o |
    /// | 4 | model parse error |
    /// | 5 | unknown reference |
    /// | 6 | model validation |
    /// | 10-29 | computation errors, one per [`ErgoError`] variant |
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Parse { .. } => 4,
            CliError::UnknownReference(_) => 5,
            CliError::Validation(_) => 6,
            CliError::Compute(e) => compute_code(e),
        }
    }
}

fn compute_code(e: &ErgoError) -> i32 {
    match e {
        ErgoError::NegativeEntry { .. } => 10,
        ErgoError::RowSumOutOfTolerance { .. } => 11,
        ErgoError::DimensionMismatch { .. } => 12,
        ErgoError::EmptyStateSpace => 13,
        ErgoError::NonFinite { .. } => 14,
        ErgoError::InvalidDistribution(_) => 15,
        ErgoError::InvalidArgument(_) => 16,
        ErgoError::VacuousBound => 17,
        ErgoError::CesaroNotSettled { .. } => 18,
        ErgoError::SingularPair => 19,
        ErgoError::NotCentered { .. } => 20,
        ErgoError::NotPrimitive { .. } => 21,
        ErgoError::BracketFailure { .. } => 22,
        ErgoError::TableTooLarge { .. } => 23,
        ErgoError::UnreachableBoundary { .. } => 24,
        ErgoError::HorizonExceeded { .. } => 25,
        ErgoError::IllPosed { .. } => 26,
        ErgoError::NoConvergence { .. } => 27,
        ErgoError::EmptyBatch => 28,
        ErgoError::SingularSystem => 29,
    }
}
