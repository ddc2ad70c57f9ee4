use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgoError {
    #[error("negative transition probability {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("row {row} sums to {sum}, outside tolerance of 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state space must contain at least one state")]
    EmptyStateSpace,

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("Markov-Dobrushin coefficient is zero; geometric bound is vacuous")]
    VacuousBound,

    #[error("Cesaro averages did not settle within {cap} terms")]
    CesaroNotSettled { cap: u64 },

    #[error("distributions have disjoint supports (overlap is zero)")]
    SingularPair,

    #[error("observable is not centered: <f, mu> = {mean}")]
    NotCentered { mean: f64 },

    #[error("no power of the transition matrix up to {max_power} is strictly positive")]
    NotPrimitive { max_power: usize },

    #[error("supremum for alpha = {alpha} not bracketed within |beta| <= {beta_cap}")]
    BracketFailure { alpha: f64, beta_cap: f64 },

    #[error("dynamic-programming table needs {cells} cells (limit {limit})")]
    TableTooLarge { cells: u128, limit: u128 },

    #[error("boundary is not reachable from state {state}")]
    UnreachableBoundary { state: usize },

    #[error("path did not reach the boundary within {cap} steps")]
    HorizonExceeded { cap: usize },

    #[error("problem is ill-posed: spectral radius {spectral_radius} >= 1")]
    IllPosed { spectral_radius: f64 },

    #[error("power iteration did not converge after {iterations} iterations (estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("empty path batch")]
    EmptyBatch,

    #[error("singular linear system")]
    SingularSystem,
}

pub type Result<T> = std::result::Result<T, ErgoError>;

/// Non-fatal conditions reported next to a result.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Every contraction coefficient up to `N` vanished; the invariant measure
    /// may depend on the starting state used to compute it.
    NonUnique { start_state: usize },
    /// The geometric envelope degenerates to the trivial bound.
    VacuousBound,
    /// The observable was shifted by its stationary mean before solving.
    AutoCentered { mean: f64 },
    /// An iterative estimate hit its iteration cap.
    NoConvergence { iterations: usize },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::NonUnique { start_state } => write!(
                f,
                "invariant measure may be non-unique; result depends on start state {start_state}"
            ),
            Warning::VacuousBound => write!(f, "contraction coefficient is zero; bound is vacuous"),
            Warning::AutoCentered { mean } => {
                write!(f, "observable was not centered (mean {mean}); centered automatically")
            }
            Warning::NoConvergence { iterations } => {
                write!(f, "iteration cap reached after {iterations} iterations")
            }
        }
    }
}
