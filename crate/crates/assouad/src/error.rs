use thiserror::Error;

/// Errors across the crate. `is_precondition` distinguishes caller errors
/// (bad config, unmet preconditions) from internal failures; the CLI maps the
/// former to exit code 2 and the latter to exit code 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero field element")]
    DivisionByZero,
    #[error("field element is not invertible (minimal polynomial is reducible)")]
    NotInvertible,
    #[error("invalid number field: {0}")]
    InvalidField(String),
    #[error("invalid IFS: {0}")]
    InvalidIfs(String),
    #[error("finite type not detected within budget (explored to level {explored_level}, {cv_count} characteristic vectors)")]
    NotClosedWithinBudget { explored_level: u32, cv_count: usize },
    #[error("transition graph is not closed; build it to closure first")]
    GraphNotClosed,
    #[error("path is not edge-consistent at step {0}")]
    BrokenPath(usize),
    #[error("mismatched neighbour sets between parent and child (builder bug)")]
    NeighbourMismatch,
    #[error("very strong separation condition required: {0}")]
    VssRequired(String),
    #[error("depth too small: {0}")]
    DepthTooSmall(String),
    #[error("query below oracle depth cap (level {requested} > cap {cap})")]
    BelowDepthCap { requested: u32, cap: u32 },
    #[error("point is not in the support of the measure")]
    OffSupport,
    #[error("empty admissible grid: {0}")]
    EmptyGrid(String),
    #[error("matrix is numerically singular")]
    NumericallySingular,
    #[error("no (m, n) found within lattice bound: theta_i not small enough")]
    LatticeSearchFailed,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for errors a caller caused (bad input or unmet precondition).
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::NeighbourMismatch | Error::NumericallySingular)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
