//! From-scratch convolutional classifier.
//!
//! Five conv/ReLU stages (max-pooled after the first four), wrapped by a
//! 2-D input batch norm and a 1-D feature batch norm, finished by a linear
//! classifier trained with softmax + NLL and AdamW. Every layer ships an
//! exact analytic backward pass, verified against central finite
//! differences (see [`gradcheck`]).

pub mod activation;
pub mod adamw;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod linear;
pub mod loss;
pub mod network;
pub mod pool;
pub mod tensor;
pub mod train;

pub use adamw::AdamWState;
pub use checkpoint::Checkpoint;
pub use network::{ConvStage, ForwardCache, Network, NetworkConfig, PoolStage};
pub use tensor::{flatten, unflatten, Mat, Tensor4};
pub use train::{resume, train, EpochHook, EpochMetrics, TrainConfig, TrainData, TrainOutcome};
