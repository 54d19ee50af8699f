use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate moment series: partial sum vanishes")]
    DegenerateSeries,

    #[error("near-singular operator at k = {k}: condition estimate {cond:.3e}")]
    NearSingular { k: Complex64, cond: f64 },

    #[error("no root found: {reason}")]
    NoRootFound { reason: String },

    #[error("inconclusive contour: |F| = {value:.3e} at M = {m}")]
    InconclusiveContour { m: Complex64, value: f64 },

    #[error("no bound state in bracket [{lo:.6e}, {hi:.6e}]")]
    NoBoundStateInBracket { lo: f64, hi: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl Error {
    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Format(_) | Error::Io(_) => 2,
            Error::Unsupported(_) => 3,
            Error::NoRootFound { .. } | Error::InconclusiveContour { .. } | Error::NoBoundStateInBracket { .. } => 4,
            Error::NearSingular { .. } | Error::Domain(_) | Error::DegenerateSeries => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
