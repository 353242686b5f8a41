use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian: max|M - M†| = {deviation:e} at scale {scale:e}")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inconsistent hyperfine splittings: nu1 + nu3 - 2 nu2 = {residual_ghz:e} GHz")]
    InconsistentSplittings { residual_ghz: f64 },

    #[error("propagation did not converge after {refinements} refinements: last two iterates differ by {disagreement:e}")]
    NonConvergence { refinements: u32, disagreement: f64 },

    #[error("pulse constraint violated at t = {t_us:e} us: |chi'| reached |delta|/2")]
    PulseSingularity { t_us: f64 },

    #[error("time {t_us:e} us lies outside the pulse window [0, {tau_us:e}]")]
    OutsidePulse { t_us: f64, tau_us: f64 },

    #[error("quadrature did not reach tolerance: error estimate {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("root finding failed: {0}")]
    RootNotFound(String),

    #[error("could not identify logical state {index}: best overlap {overlap:.4} <= 0.5")]
    LogicalIdentification { index: usize, overlap: f64 },

    #[error("degenerate physics input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<argmin::core::Error> for Error {
    fn from(e: argmin::core::Error) -> Self {
        Error::Numerical(e.to_string())
    }
}
