use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("band overflow: occupied band [{lo_hz:.4e}, {hi_hz:.4e}] Hz leaves the ±{nyquist_hz:.4e} Hz window")]
    BandOverflow { lo_hz: f64, hi_hz: f64, nyquist_hz: f64 },

    #[error("aliasing: occupied band [{lo_hz:.4e}, {hi_hz:.4e}] Hz does not fit a {new_rate_hz:.4e} Hz sample rate")]
    Aliasing { lo_hz: f64, hi_hz: f64, new_rate_hz: f64 },

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(f64, f64),

    #[error("window mismatch: center offsets {0} Hz vs {1} Hz")]
    WindowMismatch(f64, f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{what}: need at least {needed} samples, got {got}")]
    TooShort { what: &'static str, needed: usize, got: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("allocation infeasible: {0}")]
    Infeasible(String),
}
