use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("log-radius {t} outside profile domain [{t_min}, {t_max}]")]
    OutOfDomain { t: f64, t_min: f64, t_max: f64 },

    #[error("ellipticity violated: 1 + g = {value} < {eps} at t = {t}")]
    EllipticityViolation { t: f64, value: f64, eps: f64 },

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),

    #[error("profile is tied to dimension {profile} but n = {requested} was requested")]
    DimensionMismatch { profile: usize, requested: usize },

    #[error("radial solution changes sign at t = {t}")]
    SignChange { t: f64 },

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("truncation tail {tail:e} exceeds tolerance {tol:e}")]
    TailTooLarge { tail: f64, tol: f64 },

    #[error("linear system could not be solved: {0}")]
    SingularSystem(String),

    #[error("contradictory verdicts: {0}")]
    ContradictoryVerdicts(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

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

impl Error {
    /// Variant name, used as the error kind in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::EllipticityViolation { .. } => "EllipticityViolation",
            Error::InvalidProfile(_) => "InvalidProfile",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SignChange { .. } => "SignChange",
            Error::HypothesisUnmet(_) => "HypothesisUnmet",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::SingularSystem(_) => "SingularSystem",
            Error::ContradictoryVerdicts(_) => "ContradictoryVerdicts",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
        }
    }
}
