use thiserror::Error;

/// Errors produced by the geometry, analytic and simulation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The requested map is undefined because the point sits on the cut locus.
    #[error("point lies on the cut locus (antipodal configuration)")]
    CutLocus,

    #[error("{what} = {value} is outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("series did not reach tolerance within {terms} terms")]
    Truncation { terms: usize },

    #[error("no sign change of the Fréchet gradient on the search interval")]
    NoRoot,

    #[error("empty input")]
    Empty,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by invalid user input rather than numerical failure.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::Domain { .. }
                | Error::Contract(_)
                | Error::Config(_)
                | Error::Empty
        )
    }

    /// True for numerical failures (non-convergence, missing roots).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. } | Error::NoRoot | Error::Degenerate(_) | Error::CutLocus
        )
    }
}
