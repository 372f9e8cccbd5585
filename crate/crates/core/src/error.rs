use thiserror::Error;

/// Errors raised by the library. Each variant carries a short diagnostic code
/// (see [`Error::code`]) so front ends can map failures without string matching.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// α = K − 1/E must be positive, i.e. E·K > 1.
    #[error("scaling requires E*K > 1 (got E*K = {0})")]
    NonPositiveAlpha(f64),

    /// ε² = D_B/D_W must be below one.
    #[error("scaling requires D_B < D_W (got D_B = {d_b}, D_W = {d_w})")]
    DiffusionOrder { d_b: f64, d_w: f64 },

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("regime rejected: {0}")]
    Regime(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParam(_) => "E_PARAM",
            Error::NonPositiveAlpha(_) => "E_ALPHA",
            Error::DiffusionOrder { .. } => "E_DIFFUSION",
            Error::Domain(_) => "E_DOMAIN",
            Error::Regime(_) => "E_REGIME",
            Error::Numerical(_) => "E_NUMERICAL",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn numerical<S: Into<String>>(msg: S) -> Error {
    Error::Numerical(msg.into())
}

pub(crate) fn regime<S: Into<String>>(msg: S) -> Error {
    Error::Regime(msg.into())
}

pub(crate) fn domain<S: Into<String>>(msg: S) -> Error {
    Error::Domain(msg.into())
}
