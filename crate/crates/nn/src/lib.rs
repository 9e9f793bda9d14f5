//! A deliberately small neural-network engine.
//!
//! Supports the handful of layer kinds needed by the allocation policy, the
//! value estimator and the biosignal classifier: dense, valid 1-D
//! convolution, non-overlapping max pooling, flatten, ReLU, tanh and softmax.
//! Gradients are derived by hand per layer; [`gradcheck`] verifies them
//! against central finite differences.
//!
//! Every computation is in `f64`.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod network;
pub mod tensor;

pub use adam::{AdamConfig, Direction};
pub use layer::LayerSpec;
pub use loss::{argmax, cross_entropy, cross_entropy_grad_logits, softmax};
pub use network::{ForwardCache, Gradients, Network};
pub use tensor::Tensor;

/// Version string written in checkpoint headers.
pub const ENGINE_VERSION: &str = "1";

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch at layer {layer}: {detail}")]
    Shape { layer: usize, detail: String },
    #[error("invalid tensor: {0}")]
    Tensor(String),
    #[error("invalid layer spec `{0}`")]
    Spec(String),
    #[error("forward cache is stale (cache from version {cache}, network at {network})")]
    StaleCache { cache: u64, network: u64 },
    #[error("non-finite gradient in parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("non-finite value produced by layer {0}")]
    NonFinite(usize),
    #[error("invalid probability distribution: {0}")]
    Distribution(String),
    #[error("invalid optimizer config: {0}")]
    Optimizer(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NnError>;
