//! Dense MLP trained with backpropagation on an MAE + L2 objective, using
//! AdamW and a cosine schedule with warm restarts.

mod matrix;
mod model;
mod optim;
mod schedule;
mod train;

use thiserror::Error;

pub use matrix::{gemm, Matrix};
pub use model::{backward, init_model, loss, Activation, Gradients, Layer, LayerOutputs, MlpModel, SINE_OMEGA0};
pub use optim::{adamw_step, AdamWConfig, OptimizerState};
pub use schedule::{CyclePosition, WarmRestartSchedule};
pub use train::{lr_at, train, train_with_observer, TrainConfig, TrainReport, DIVERGENCE_LIMIT};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid layer sizes: {0}")]
    InvalidSizes(&'static str),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("empty batch")]
    EmptyBatch,
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
}
