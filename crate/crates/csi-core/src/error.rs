//! Error type shared across the engine.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("raster parse error at byte {offset}: {reason}")]
    RasterParse { offset: usize, reason: String },

    #[error("inconsistent singles rates: radicand {0:e} is below tolerance")]
    InconsistentRates(f64),

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("correlation undefined: {0}")]
    CorrelationUndefined(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag, one per variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGeometry(_) => "invalid-geometry",
            Error::RasterParse { .. } => "raster-parse",
            Error::InconsistentRates(_) => "inconsistent-rates",
            Error::DegenerateDistribution(_) => "degenerate-distribution",
            Error::CorrelationUndefined(_) => "correlation-undefined",
            Error::ResourceLimit(_) => "resource-limit",
            Error::InvalidConfig(_) => "invalid-config",
            Error::Io(_) => "io",
        }
    }
}
