//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input dimensions do not match what the operation requires.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A configuration value violates its invariants.
    #[error("invalid config: {0}")]
    Config(String),

    /// Zero-forcing equalization hit a near-zero channel response.
    #[error("singular channel at subcarrier {bin}: |H| = {magnitude:.3e}")]
    SingularChannel { bin: usize, magnitude: f64 },

    /// A numeric-domain precondition was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Training diverged (NaN or infinite loss).
    #[error("non-finite loss at epoch {epoch}, step {step}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        step: usize,
        detail: String,
    },

    /// Dataset SNR-floor redraws exhausted.
    #[error("SNR floor not satisfiable after {attempts} redraws (capture {capture})")]
    SnrRedrawExhausted { capture: u64, attempts: usize },

    /// Checkpoint or dataset file is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
