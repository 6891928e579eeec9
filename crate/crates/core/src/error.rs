use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("coherent label magnitude {magnitude} exceeds cap {cap}")]
    LabelOverflow { magnitude: f64, cap: f64 },

    #[error("state is not normalized: trace = {re} + {im}i")]
    NotNormalized { re: f64, im: f64 },

    #[error("log-domain evaluation overflowed: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
