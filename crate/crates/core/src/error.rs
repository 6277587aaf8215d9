use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time step {dt:e} violates the CFL bound; admissible dt is {admissible:e}")]
    CflViolation { dt: f64, admissible: f64 },

    #[error("non-finite flux in omega slice {slice}, cell {cell}")]
    NonFinite { slice: usize, cell: usize },

    #[error("average phase undefined (R = {r:e} is at or below the amplitude tolerance)")]
    UndefinedPhase { r: f64 },

    #[error("omega slice {0} carries no mass")]
    ZeroMassSlice(usize),

    #[error("requested time {t} outside the recorded interval [{start}, {end}]")]
    OutsideRecord { t: f64, start: f64, end: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
