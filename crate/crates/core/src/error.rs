use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lens configuration: {0}")]
    InvalidConfig(String),

    #[error("spatial frequency {0} is outside [-1, 1]")]
    SpatialFrequencyOutOfRange(f64),

    #[error("user index {index} out of range for {count} users")]
    UserIndex { index: usize, count: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no pattern null found for delta <= {max_delta}")]
    NullNotFound { max_delta: f64 },

    #[error("no sidelobe peak found after the first null")]
    SidelobeNotFound,

    #[error("sidelobe analysis needs at least 11 elements, got {0}")]
    TooFewElements(usize),

    #[error(
        "quadrature did not converge: estimated error {achieved:e} exceeds tolerance {requested:e}"
    )]
    Quadrature { achieved: f64, requested: f64 },

    #[error("closed-form probability needs d_tilde >= 2 (large-array regime), got {0}")]
    OutsideApproximationRegime(f64),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}
