//! End-to-end autoencoder communication systems over an AWGN channel,
//! adversarial perturbations against them, and Monte Carlo robustness
//! evaluation.
//!
//! The crate is organized as:
//!
//! - [`nn`] — a minimal neural-network engine (dense and convolutional
//!   layers, cross-entropy, reverse-mode gradients with respect to both
//!   parameters and inputs, Adam);
//! - [`autoencoder`] — the MLP and CNN autoencoder architectures, the
//!   transmit power constraint, and end-to-end training through the channel;
//! - [`channel`] — AWGN noise, Eb/N0 conversion, perturbation power
//!   accounting, and cyclic time shifts;
//! - [`attacks`] — per-input FGM perturbations, input-agnostic (universal)
//!   perturbations, shift-invariant perturbations, and black-box transfer
//!   scenarios;
//! - [`classical`] — BPSK + Hamming(7,4) + soft maximum-likelihood decoding
//!   baseline;
//! - [`evaluation`] — reproducible Monte Carlo BLER estimation, Eb/N0
//!   sweeps, and curve comparison;
//! - [`experiment`] — declarative experiment configs and CSV reporting;
//! - [`cli`] — the `train` / `craft` / `evaluate` / `compare` subcommands.

pub mod attacks;
pub mod autoencoder;
pub mod channel;
pub mod classical;
pub mod cli;
pub mod evaluation;
pub mod experiment;
pub mod nn;
pub mod tensor;
pub(crate) mod util;

pub use tensor::Tensor;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (layer wiring, experiment files, CLI flags).
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid argument to an operation (out-of-range label, bad grid, ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Shape mismatch attributed to a specific network layer.
    #[error("shape mismatch at layer {layer}: {msg}")]
    Shape { layer: usize, msg: String },

    /// Degenerate numeric input (e.g. an all-zero vector fed to the power
    /// normalization).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Numeric failure (NaN/Inf encountered where finite values are required).
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Training diverged.
    #[error("training diverged at epoch {epoch}: {msg}")]
    Training { epoch: usize, msg: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) | Error::Shape { .. } | Error::Json(_) => 2,
            Error::Degenerate(_) | Error::Numeric(_) | Error::Training { .. } => 3,
            Error::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
