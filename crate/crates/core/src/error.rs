use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants map onto the exit-code classes used by the command-line
/// front end: `Usage` and `Domain` are caller mistakes, the rest are
/// estimation-time failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The call is malformed (bad sizes, empty sets, out-of-range options).
    #[error("usage error: {0}")]
    Usage(String),

    /// The request is valid but exceeds what this implementation supports.
    #[error("capability error: {0}")]
    Capability(String),

    /// A fit or Monte Carlo estimate could not be produced.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A probability integral transform hit 0 or 1.
    #[error("boundary error: {0}")]
    Boundary(String),

    /// The tail approximation `1 - V(u)` is not a probability at this threshold.
    #[error("threshold too low: {0}")]
    ThresholdTooLow(String),

    /// The optimizer found no finite objective value to work from.
    #[error("optimization error: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short lowercase label of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Usage(_) => "usage",
            Error::Capability(_) => "capability",
            Error::Estimation(_) => "estimation",
            Error::Boundary(_) => "boundary",
            Error::ThresholdTooLow(_) => "threshold-too-low",
            Error::Optimization(_) => "optimization",
        }
    }

    /// True for errors caused by the request rather than the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Usage(_) | Error::Capability(_))
    }
}
