use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("off-grid interval [{a}, {b}]")]
    OffGridInterval { a: f64, b: f64 },

    #[error("time {t} is not a grid node")]
    OffGridTime { t: f64 },

    #[error("empty pair set on [{a}, {b}]")]
    EmptyPairSet { a: f64, b: f64 },

    #[error("r = {r} not a grid multiple of h = {h}")]
    NotGridMultiple { r: f64, h: f64 },

    #[error("insufficient left extension: need {needed} steps before the target window, have {available}")]
    InsufficientExtension { needed: usize, available: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("coarsening factor {factor} does not divide {n} steps")]
    NonDivisibleFactor { factor: usize, n: usize },

    #[error("blow-up at step {0}")]
    BlowUp(usize),

    #[error("missing tensor: {0}")]
    MissingTensor(&'static str),

    #[error("unknown coefficient model `{0}`")]
    UnknownModel(String),

    #[error("need at least 3 usable points, got {0}")]
    TooFewPoints(usize),

    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
