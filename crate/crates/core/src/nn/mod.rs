//! Differentiable Q-networks written out by hand.
//!
//! A statement is embedded as `E[h] + E[r] + E[t] + E[key]·(value/max_val)·s[key]`.
//! The memory network encodes short-term, episodic and semantic stores with
//! separate LSTMs, mixes the three encodings with `softmax(QKᵀ)` attention
//! and sums the attended rows into one vector for a dueling head. The history
//! network runs one LSTM over the window and feeds the dueling head directly.
//!
//! Samples are processed one at a time; a batch gradient is the sum of
//! per-sample gradients, so no padding is involved.

mod adam;
mod checkpoint;
mod gradcheck;
mod lstm;
mod net;
mod ops;
mod tensor;

pub use adam::Adam;
pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use gradcheck::{analytic_gradient, gradcheck, relative_error, GradCheckReport};
pub use net::{Forward, GradTape, Gradients, NetConfig, NetKind, QNet, MEMORY_STORES};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("symbol {0} is outside the embedding table")]
    UnknownSymbol(u32),
    #[error("qualifier key {0} has no scaling factor")]
    UnknownQualifier(u32),
    #[error("invalid state: {0}")]
    State(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("bad checkpoint: {0}")]
    Format(String),
}

/// Number of learnable parameters a configuration defines.
pub fn param_count(config: &NetConfig) -> Result<usize, NnError> {
    config.validate()?;
    Ok(net::Layout::new(config).total)
}
