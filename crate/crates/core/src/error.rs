use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested operation is not expressible in the measure's or set's representation.
    #[error("representation limit: {0}")]
    RepresentationLimit(String),

    #[error("approach path too short: need at least {needed} samples, got {got}")]
    PathTooShort { needed: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("solver did not converge after {iterations} iterations: {detail}")]
    NonConvergence { iterations: usize, detail: String },

    #[error("resolution too coarse: {0}")]
    ResolutionTooCoarse(String),

    #[error("no sign change: {0}")]
    NoSignChange(String),

    #[error("degenerate cone: {0}")]
    DegenerateCone(String),

    #[error("cone condition fails at {} sample(s)", .0.len())]
    SampleViolation(Vec<usize>),

    #[error("verification window is empty: {0}")]
    WindowEmpty(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
