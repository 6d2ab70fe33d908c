use thiserror::Error;

/// Errors raised by baseline, p-value and audit computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An accuracy does not correspond to a whole number of correct answers.
    #[error("accuracy {accuracy} on n={n} is not an integral count (n*acc = {scaled})")]
    NonIntegralCount {
        accuracy: f64,
        n: usize,
        scaled: f64,
    },

    /// The incomplete beta continued fraction did not converge.
    #[error("continued fraction failed to converge after {0} iterations")]
    Convergence(usize),

    /// Exhaustive enumeration would exceed the feasibility bound.
    #[error("enumeration of {cells} tuples exceeds the limit of {limit}")]
    Infeasible { cells: f64, limit: u64 },

    /// A per-example distribution would be too large to build.
    #[error("per-example distribution over n={n} exceeds the limit of {limit} examples")]
    TooManyExamples { n: usize, limit: usize },

    /// A record field is missing or malformed.
    #[error("row {row}: field `{field}`: {message}")]
    Field {
        row: usize,
        field: String,
        message: String,
    },

    /// One or more rows of an input file failed validation.
    #[error("{} invalid row(s); first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Rows(Vec<Error>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that stem from numerics or feasibility limits rather
    /// than invalid user input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Convergence(_) | Error::Infeasible { .. } | Error::TooManyExamples { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
