use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("initial datum is not locally integrable: {0}")]
    NotLocallyIntegrable(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solution diverged at t={t}: {reason}")]
    Diverged { t: f64, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("incompatible runs: {0}")]
    Incompatible(String),
    #[error("exponent outside admissible range: {0}")]
    ExponentDomain(String),
    #[error("insufficient snapshot schedule: {0}")]
    InsufficientSchedule(String),
    #[error("parameter regime not covered: {0}")]
    Regime(String),
    #[error("shooting inconclusive: {0}")]
    Inconclusive(String),
    #[error("no separatrix found: {0}")]
    NoSeparatrix(String),
    #[error("shooting map has unexpected structure: {0}")]
    MapStructure(String),
    #[error("eigenvalue bracket failure: {0}")]
    EigenBracket(String),
    #[error("supersolution construction failed: {0}")]
    ConstructionFailed(String),
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
