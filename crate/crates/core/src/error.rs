//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid box: lower[{index}] = {lower} exceeds upper[{index}] = {upper}")]
    InvalidBox {
        index: usize,
        lower: f64,
        upper: f64,
    },

    #[error("did not reach tolerance {tolerance:e}; best residual {best_residual:e}")]
    NonConvergence { tolerance: f64, best_residual: f64 },

    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    #[error("step size {step} exceeds the stability bound {bound}")]
    StepSize { step: f64, bound: f64 },

    #[error("coordinate {coordinate} last touched at iteration {touched}, requested {requested}")]
    StaleState {
        coordinate: usize,
        touched: usize,
        requested: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
