use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("feature {index} evaluated to {value}, outside [-1, 1]")]
    FeatureOutOfRange { index: usize, value: f64 },

    #[error("configuration has {got} spins but the model has N = {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("site {site} out of range for N = {n}")]
    SiteOutOfRange { site: usize, n: usize },

    #[error(
        "model violates the R_{{1,1}}-constant assumption: self-overlap spread {spread:e} exceeds tolerance {tolerance:e}"
    )]
    SelfOverlapNotConstant { spread: f64, tolerance: f64 },

    #[error("N = {n} exceeds the exact-enumeration limit {limit}; use MCMC mode")]
    TooLargeForExact { n: usize, limit: usize },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
