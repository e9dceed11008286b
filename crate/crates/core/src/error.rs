use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} of {what} sums to {sum}, expected 1")]
    NonStochasticRow {
        what: String,
        row: usize,
        sum: String,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("level {0} has no states with positive mass")]
    EmptyLevel(usize),

    #[error("level {requested} exceeds model horizon {horizon}")]
    HorizonExceeded { requested: usize, horizon: usize },

    #[error("state {state} at level {level} has zero mass")]
    ZeroMassState { level: usize, state: usize },

    #[error("level 0 has no predecessor level")]
    NoPredecessorLevel,

    #[error("bad telescoping schedule: {0}")]
    BadSchedule(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("measure is not normalized: total mass {0}")]
    NotNormalized(String),

    #[error("instance too large for exhaustive search: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("window {window} exceeds the {available} available levels")]
    WindowTooLarge { window: usize, available: usize },

    #[error("decision window is empty")]
    EmptyWindow,

    #[error("level {0} is not present in the report")]
    LevelMissing(usize),

    #[error("tree heights differ: {left} vs {right}")]
    HeightMismatch { left: usize, right: usize },

    #[error("no structure-preserving coupling exists")]
    NoCoupling,

    #[error("automorphism semantics requires uniform child masses (level {level}, state {state})")]
    NotHomogeneous { level: usize, state: usize },

    #[error("level {level} is smaller than function depth {depth}")]
    LevelTooSmall { level: usize, depth: usize },

    #[error("sample is empty")]
    EmptySample,

    #[error("matrix size {k} is below the minimum {min}")]
    MatrixTooSmall { k: usize, min: usize },

    #[error("invalid semimetric: {0}")]
    InvalidSemimetric(String),

    #[error("function table has no value for path {0:?}")]
    MissingValue(Vec<usize>),

    #[error("invalid number {0:?}")]
    InvalidNumber(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by malformed or inconsistent input, as
    /// opposed to failures of a numerical routine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numeric(_))
    }
}
