use thiserror::Error;

/// Failures raised by the solvers and the parameter layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("gamma out of open range (0, 1/6): {0}")]
    GammaOutOfRange(f64),

    #[error("config: {0}")]
    Config(String),

    #[error("missing key: {0}")]
    MissingKey(String),

    #[error("unknown key: {0}")]
    UnknownKey(String),

    #[error("resolution: {0}")]
    Resolution(String),

    #[error("energy drift {drift:e} exceeds {limit:e}; reduce dt")]
    EnergyDrift { drift: f64, limit: f64 },

    #[error("norm drift {drift:e} exceeds {limit:e}; reduce the step")]
    NormDrift { drift: f64, limit: f64 },

    #[error("oscillator singular: nu = {nu:e} at t = {t}")]
    SingularOscillator { nu: f64, t: f64 },

    #[error("boundary leak: |field| = {amplitude:e} at the domain edge")]
    BoundaryLeak { amplitude: f64 },

    #[error("outside validity window: {0}")]
    OutsideWindow(String),

    #[error("path does not cover t = {0}")]
    PathRange(f64),

    #[error("trajectory check: {0}")]
    Trajectory(String),

    #[error("fit: {0}")]
    Fit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
