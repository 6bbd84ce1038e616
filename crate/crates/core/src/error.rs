use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimension(String),

    #[error("block {block} is not Hermitian (max |M - M^dag| = {defect:e})")]
    NotHermitian { block: &'static str, defect: f64 },

    #[error("transformation is not unitary (max |U^dag U - I| = {defect:e})")]
    NotUnitary { defect: f64 },

    #[error("coupling constant c must be nonzero")]
    ZeroCoupling,

    #[error("invalid time grid: {0}")]
    Grid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite sample in {signal} at index {index}")]
    NonFinite { signal: &'static str, index: usize },

    #[error("time {t} is not on the grid")]
    OffGrid { t: f64 },

    #[error("time {t} lies outside the window [{t0}, {t1}]")]
    OutsideWindow { t: f64, t0: f64, t1: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Input/contract violations, as opposed to failures during computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Io(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
