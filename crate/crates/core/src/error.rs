use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not symmetric")]
    NotSymmetric,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate direction: projections have zero spread")]
    DegenerateDirection,

    #[error("too few observations: need at least {needed}, found {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("empty subsample")]
    EmptySubsample,

    #[error("observation labels are required")]
    MissingLabels,

    #[error("direction sequence exhausted after {0} directions")]
    DirectionsExhausted(usize),
}
