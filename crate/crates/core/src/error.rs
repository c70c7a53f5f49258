use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure in {what}: best estimate {estimate:e}, error bound {error_bound:e}")]
    NumericalFailure {
        what: String,
        estimate: f64,
        error_bound: f64,
    },

    #[error("integral diverges at t = 0: {0}")]
    NotIntegrable(String),

    #[error("wrong nonlinearity variant: {0}")]
    WrongVariant(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("time step failed at t = {t:e}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("supersolution violated at t = {t:e}, r = {r:e}: u = {u:e} > bound {bound:e}")]
    ComparisonViolation { t: f64, r: f64, u: f64, bound: f64 },

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sweep incomplete: {0}")]
    IncompleteSweep(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::WrongVariant(_)
            | Error::InsufficientData(_)
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => 2,
            Error::IncompleteSweep(_) => 4,
            _ => 3,
        }
    }
}
