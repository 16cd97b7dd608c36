use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("scenario set is empty")]
    EmptyScenarioSet,

    #[error("scenario weights sum to {sum}, expected 1 (tolerance 1e-9)")]
    WeightSum { sum: f64 },

    #[error("scenario weight {index} is {value}; weights must be finite and strictly positive")]
    InvalidWeight { index: usize, value: f64 },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("random quantities live on different scenario spaces")]
    SpaceMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{operation} is only available for {required}; got dimension {found}")]
    UnsupportedDimension {
        operation: &'static str,
        required: &'static str,
        found: usize,
    },

    #[error("direction has a negative component ({0})")]
    NegativeDirection(f64),

    #[error("transfer family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("risk measure not supported here: {0}")]
    IncompatibleMeasure(String),

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error("optimal selection unavailable: {0}")]
    OptimalSelectionUnavailable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
