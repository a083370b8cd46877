use thiserror::Error;

use crate::increment::TraceRow;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("F_{p}^{n} has more than {cap} elements; raise the cap to allow it")]
    TooLarge { p: u32, n: u32, cap: u64 },

    #[error("ambient mismatch: F_{left_p}^{left_n} vs F_{right_p}^{right_n}")]
    AmbientMismatch {
        left_p: u32,
        left_n: u32,
        right_p: u32,
        right_n: u32,
    },

    #[error("element {element} is outside F_{p}^{n}")]
    NotInGroup { element: u64, p: u32, n: u32 },

    #[error("{what} out of range: {detail}")]
    OutOfRange { what: &'static str, detail: String },

    #[error("{0} must be nonempty")]
    EmptySet(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inner-product hypothesis violated: <mu_A o mu_A, mu_C> = {value} exceeds 1/2")]
    HypothesisViolated { value: String },

    #[error("increment not found within budget (searched codimension 1..={max_codim})")]
    IncrementNotFound { max_codim: u32 },

    #[error("certificate check failed: {0}")]
    Certificate(String),

    #[error("dichotomy run failed at step {step}: {cause}")]
    Dichotomy {
        step: usize,
        cause: Box<Error>,
        trace: Vec<TraceRow>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(what: &'static str, detail: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            detail: detail.into(),
        }
    }
}
