use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} components")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported regularizer structure: {0}")]
    Unsupported(String),

    #[error("numeric solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    /// The line search doubled the modulus `max_doublings` times without
    /// accepting. This points at a broken oracle or geometry.
    #[error("line search exceeded {max_doublings} doublings (last modulus {last_modulus:e})")]
    BacktrackOverflow { max_doublings: u32, last_modulus: f64 },

    #[error("problem has no components")]
    EmptyProblem,

    #[error("sequential sample order needs at least {needed} components, problem has {available}")]
    SequentialTooShort { needed: usize, available: usize },

    #[error("trace does not match problem: {0}")]
    TraceMismatch(String),

    #[error("line {line}: row has {found} fields, expected {expected}")]
    RaggedRow { line: u64, expected: usize, found: usize },

    #[error("line {line}, field {field}: `{value}` is not a number")]
    NonNumeric { line: u64, field: usize, value: String },

    #[error("no data rows in input")]
    EmptyInput,

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {value}"),
        })
    }
}
