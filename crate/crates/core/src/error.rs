use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants fall into three families used by the command-line front end:
/// configuration problems, numerical failures and unmet certificate premises.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("exponent overflow: {0}")]
    Overflow(String),
    #[error("singular system (condition estimate {condition:.3e})")]
    SingularSystem { condition: f64 },
    #[error("grazing incidence: |cos(theta0)| = {0:.3e} is below the margin")]
    GrazingIncidence(f64),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("premise violated: {0}")]
    PremiseViolated(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Premise,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidPotential(_)
            | Error::InvalidConfig(_)
            | Error::Unsupported(_)
            | Error::GridMismatch(_)
            | Error::GrazingIncidence(_)
            | Error::Io(_) => ErrorClass::Config,
            Error::Overflow(_) | Error::SingularSystem { .. } | Error::NonFinite(_) => {
                ErrorClass::Numerical
            }
            Error::PremiseViolated(_) => ErrorClass::Premise,
        }
    }

    /// Process exit code: 2 config, 3 numerical, 4 premise.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Premise => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
