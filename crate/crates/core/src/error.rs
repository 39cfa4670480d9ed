use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("column {index} of B is the zero vector")]
    ZeroColumn { index: usize },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("interval [{start}, {end}] of actuator {actuator} lies outside [0, {horizon}]")]
    IntervalOutOfRange {
        actuator: usize,
        start: f64,
        end: f64,
        horizon: f64,
    },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("profile value {value} at cell {index} is negative")]
    NegativeValue { index: usize, value: f64 },

    #[error("point {x} outside domain [0, {measure}]")]
    OutOfDomain { x: f64, measure: f64 },

    #[error("profiles are sampled on different domains")]
    DomainMismatch,

    #[error("level set {{f = {threshold}}} has measure {available}, need {required}")]
    InsufficientLevelSet {
        threshold: f64,
        available: f64,
        required: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
