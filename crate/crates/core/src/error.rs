//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by the numerical kernels and the layers built on them.
#[derive(Debug, Error)]
pub enum SlimError {
    /// Malformed input: wrong dimensions, non-finite entries, bad indices.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A matrix was singular to working precision where an invertible one
    /// was required.
    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    /// An iterative numerical procedure failed to converge or produced
    /// non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The fast/slow decomposition degenerated at an evaluation point
    /// (normal hyperbolicity violated, singular fast block).
    #[error("degenerate fast/slow decomposition: {0}")]
    Degenerate(String),

    /// Stiff integration failure: step-size underflow or divergence.
    #[error("integration failure at t = {t}: {message}")]
    Integration { t: f64, message: String },

    /// Dataset construction could not satisfy the request.
    #[error("data error: {0}")]
    Data(String),

    /// PINN training failure, tagged with the protocol stage it occurred in.
    #[error("training failure in stage {stage}: {source}")]
    Training {
        stage: usize,
        #[source]
        source: Box<SlimError>,
    },

    /// Experiment configuration did not resolve against the registries.
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure while writing or reading experiment artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SlimError>;
