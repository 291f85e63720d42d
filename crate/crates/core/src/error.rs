use thiserror::Error;

/// Errors raised anywhere in the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("integrand is not finite at y = {abscissa} (value {value})")]
    IntegrationFailure { abscissa: f64, value: f64 },

    #[error("quadrature tolerance not met: estimate {estimate} with error {error_estimate} after {subdivisions} subdivisions")]
    ToleranceNotMet {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("objective is not finite at x = {abscissa} (value {value})")]
    Evaluation { abscissa: f64, value: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("worst-case risk diverges: still growing at search bound {bound} (incumbent {incumbent})")]
    DivergingWorstCase { bound: f64, incumbent: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
