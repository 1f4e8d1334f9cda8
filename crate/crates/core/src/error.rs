use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector potential `{0}` has no closed-form divergence")]
    MissingDivergence(String),

    #[error("expected a scalar potential, got vector family `{0}`")]
    NotScalar(String),

    #[error("QR iteration stalled on active block [{lo}, {hi}] after {iterations} iterations")]
    NoConvergence {
        lo: usize,
        hi: usize,
        iterations: usize,
    },

    #[error("spectral parameter z = {re} + {im}i lies within {distance} of the spectrum (minimum {required})")]
    TooCloseToSpectrum {
        re: f64,
        im: f64,
        distance: f64,
        required: f64,
    },

    #[error("symbol is negative ({value}) at x = {x:?}, xi = {xi:?}")]
    NegativeSymbol { value: f64, x: Vec<f64>, xi: Vec<f64> },

    #[error("matching ambiguity: {0}")]
    Ambiguous(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
