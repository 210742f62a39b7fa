use thiserror::Error;

/// Errors raised while validating inputs or evaluating the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("case base must be non-empty")]
    EmptyCaseBase,

    #[error("dimension mismatch at {field}: expected {expected}, found {found}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },

    #[error("{field} = {value} is outside [0, 1]")]
    OutOfUnitRange { field: String, value: f64 },

    #[error("{field}: value {value} is outside declared bounds [{min}, {max}]")]
    OutOfBounds {
        field: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{field}: degenerate attribute range [{min}, {max}]")]
    DegenerateRange { field: String, min: f64, max: f64 },

    #[error("{field}: similarity scale must be positive and finite, got {value}")]
    InvalidScale { field: String, value: f64 },

    #[error("{field}: polarity must be 0 or 1, got {value}")]
    InvalidPolarity { field: String, value: i64 },

    #[error("invalid utility weights: {0}")]
    InvalidWeights(String),

    #[error("negative distance {0}")]
    NegativeDistance(f64),

    #[error("level {value} is outside {range}")]
    InvalidLevel { value: f64, range: &'static str },

    #[error("case index {index} out of range for {len} cases")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("lattice of {required} points exceeds budget of {budget} points")]
    BudgetExceeded { required: f64, budget: u64 },

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("oracle disagreement at n = {attrs}: fast {fast} vs grid {grid} exceeds {tolerance}")]
    OracleDisagreement {
        attrs: usize,
        fast: f64,
        grid: f64,
        tolerance: f64,
    },

    #[error("inconsistent partners: {0}")]
    InconsistentPartners(String),
}

pub type Result<T> = std::result::Result<T, Error>;
