//! Fully convolutional encoder-decoder with skip connections.
//!
//! Encoder stages double the channel count and halve the resolution; the
//! deepest post-ReLU activation is the bottleneck feature vector (16 × 16 ×
//! 64 = 16384 values under the default configuration). The decoder
//! upsamples by nearest neighbour, applies a 3×3 convolution and
//! concatenates the encoder activation of matching resolution.
//!
//! Everything is `f64`. Gradients come from a small tape that records each
//! operation of the forward pass and replays it backwards.

mod config;
mod io;
mod model;
mod ops;
mod predict;
mod train;

use thiserror::Error;

pub use config::FcnConfig;
pub use io::FORMAT_TAG;
pub use model::{bce, Batch, FcnModel, Forward, LossKind, Param, BCE_EPS};
pub use predict::{largest_component, predict_dot, DotPrediction, DEFAULT_AREA_THRESHOLD};
pub use train::{train_fcn, Optimizer, TrainConfig, TrainState, TrainStatus};

#[derive(Debug, Error)]
pub enum FcnError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("input has {got} values, expected {expected}")]
    Shape { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("mask values must be 0 or 1")]
    NonBinaryMask,
    #[error("invalid training setup: {0}")]
    Train(String),
    #[error("model document: {0}")]
    Format(String),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}
