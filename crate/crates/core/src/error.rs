use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, got {found}")]
    RankMismatch { expected: usize, found: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("identity element in avoid set: no congruence subgroup can separate it")]
    IdentityInAvoid,

    #[error("gamma must be a nontrivial element")]
    IdentityGamma,

    #[error("prime {p} is inadmissible: lamp value {value} lies in (pZ)^d")]
    InadmissiblePrime { p: u64, value: String },

    #[error("epsilon {0} must lie strictly between 0 and 1")]
    EpsilonOutOfRange(String),

    #[error("{what}: size {size} exceeds budget {budget}")]
    BudgetExceeded {
        what: &'static str,
        size: String,
        budget: u64,
    },

    #[error("modulus {p}^{k} does not fit in 63 bits")]
    ModulusOverflow { p: u64, k: u32 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("windows are not nested: {0}")]
    NonNestedWindows(String),

    #[error("window primes are not pairwise distinct: {0} repeats")]
    DuplicatePrime(u64),

    #[error("measure condition violated: |A| = {a} is not smaller than |B| = {b}")]
    MeasureCondition { a: usize, b: usize },

    #[error("invalid state set: {0}")]
    InvalidStateSet(String),

    #[error("level is not transitive")]
    NotTransitive,

    #[error("malformed castle: {0}")]
    MalformedCastle(String),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("json: {0}")]
    Json(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub(crate) fn budget(what: &'static str, size: impl ToString, budget: u64) -> Self {
        Error::BudgetExceeded {
            what,
            size: size.to_string(),
            budget,
        }
    }

    /// Malformed-input errors, as opposed to failed checks.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::RankMismatch { .. }
                | Error::NotPrime(_)
                | Error::IdentityInAvoid
                | Error::IdentityGamma
                | Error::InadmissiblePrime { .. }
                | Error::EpsilonOutOfRange(_)
                | Error::Parse { .. }
                | Error::Input(_)
                | Error::NonNestedWindows(_)
                | Error::MeasureCondition { .. }
                | Error::InvalidStateSet(_)
                | Error::Json(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
