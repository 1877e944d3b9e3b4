use thiserror::Error;

/// Errors raised by the laboratory's numerical routines and the CLI layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cannot parse polynomial at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("direction vector is zero or not normalized (|w| = {norm})")]
    BadDirection { norm: f64 },

    #[error("the polynomial vanishes identically on the region")]
    FunctionVanishes,

    #[error("sampling budget exhausted: {0}")]
    BudgetExhausted(String),

    #[error("bad bracket: {0}")]
    BadBracket(String),

    #[error("the restriction to the ray is identically zero")]
    DegenerateRay,

    #[error("the slice polynomial is identically zero")]
    IdenticallySingularSlice,

    #[error("zero-set sampling accepted {accepted} of {requested} requested points")]
    EmptyAfterBudget { accepted: usize, requested: usize },

    #[error("empty zero-set sample")]
    EmptySample,

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("empty point set")]
    EmptySet,

    #[error("invalid cube collection: {0}")]
    InvalidCover(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("usage: {0}")]
    Usage(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
