use thiserror::Error;

/// Errors surfaced by the risk engine and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} outside trajectory range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("covariance is not positive semi-definite even after jitter")]
    SingularCovariance,

    #[error("sample count {0} is below the minimum of 100")]
    TooFewSamples(usize),

    #[error("quadrature resolution {0} m is coarser than 0.25 m")]
    ResolutionTooCoarse(f64),

    #[error("unknown answer option {0:?}")]
    UnknownOption(String),

    #[error("waypoint answers are not accepted by this query")]
    WaypointNotAllowed,

    #[error("malformed payload: {0}")]
    Malformed(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
}

pub type Result<T> = std::result::Result<T, Error>;
