//! Dense tensors, layers with hand-written backward passes, the fully
//! convolutional policy/value network, growth operations and checkpoints.

pub mod checkpoint;
pub mod grow;
pub mod layers;
pub mod loss;
pub mod network;
pub mod optim;
mod tensor;

use thiserror::Error;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointError};
pub use grow::{grow_add_block, grow_add_channels, grow_kernel, ChannelGroup};
pub use layers::{conv2d, global_pool, Conv2d, Linear};
pub use loss::{masked_log_softmax, Example, LossBreakdown};
pub use network::{Network, NetworkOutput, NetworkSpec, ResidualBlock};
pub use optim::sgd_step;
pub use tensor::{Scalar, Tensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("non-finite gradient in `{layer}`")]
    NonFiniteGradient { layer: String },
    #[error("target distribution sums to {sum}, expected 1")]
    BadTarget { sum: f64 },
    #[error("no legal action in mask")]
    EmptyMask,
    #[error("invalid growth: {0}")]
    Growth(String),
}
