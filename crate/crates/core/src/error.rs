use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("exact enumeration supports at most {cap} bins, configuration has {bins}")]
    TooManyBins { bins: u64, cap: u64 },

    #[error("covariance matrix is not positive definite ({0})")]
    SingularCovariance(&'static str),

    #[error("source is not degraded: p(x,y,z) != p(x,y) p(z|y)")]
    NotDegraded,

    #[error("enumeration of {cells} sequence pairs exceeds the cap of {cap}")]
    ScaleCap { cells: u64, cap: u64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
