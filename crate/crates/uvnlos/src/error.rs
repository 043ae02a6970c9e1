//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("azimuth angle degenerate (cotangent undefined at working precision)")]
    DegenerateAzimuth,
    #[error("rotating-plane frame degenerate (in-plane normal components vanish)")]
    DegenerateFrame,
    #[error("frame angles contain NaN; ordering undefined")]
    UnorderedFrame,
    #[error("scattering coefficient is zero; phase mixture undefined")]
    ZeroScattering,
    #[error("path length to receiver below the epsilon floor; integrand near-singular")]
    EpsilonUnderflow,
    #[error("no photon produced a nonzero contribution")]
    InsufficientPhotons,
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation failed: {0:?}")]
    Validation(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
