use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid of {grid} points cannot resolve {modes} modes without aliasing (need at least {})", 2 * modes + 1)]
    Aliasing { grid: usize, modes: usize },

    #[error("half-period mismatch: {left} vs {right}")]
    HalfPeriodMismatch { left: f64, right: f64 },

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("propagation overflow in mode {mode} at t = {time}: growth factor e^({log_growth:.3}) exceeds the value cap")]
    Overflow {
        mode: usize,
        time: f64,
        log_growth: f64,
    },

    #[error("inverse propagation of mode {mode} at t = {time} amplifies by {amplification:.3e}, above the cap {cap:.3e}")]
    IllConditioned {
        mode: usize,
        time: f64,
        amplification: f64,
        cap: f64,
    },

    #[error("argument {value} is outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },
}

impl Error {
    /// True for failures caused by exponential growth or decay of modes, as
    /// opposed to malformed input.
    pub fn is_numeric_instability(&self) -> bool {
        matches!(self, Error::Overflow { .. } | Error::IllConditioned { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
