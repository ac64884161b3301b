//! Concatenated-subnetwork fake-news classifier trained from scratch.

mod metrics;
mod model;
mod train;

use thiserror::Error;

pub use metrics::{evaluate, Metrics};
pub use model::{
    forward, grad, init_params, loss, loss_and_grad, Dense, ModelConfig, ModelParams, LOGIT_CLAMP, PROB_CLIP,
};
pub use train::{load_params, save_params, train, Optimizer, TrainConfig, MODEL_FORMAT, MODEL_VERSION};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("invalid training config: {0}")]
    TrainConfig(String),
    #[error("input shape mismatch: {0}")]
    Shape(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("label {0} is not 0 or 1")]
    BadLabel(f64),
    #[error("training diverged in epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64 },
    #[error("model file: {0}")]
    Persist(String),
}
