//! Convolutional encoder-decoder beamformer implemented from first
//! principles: layers with hand-written gradients, He-normal
//! initialization, Adam, the signed log-error loss and a deterministic
//! training loop.

pub mod gradcheck;
pub mod layers;
pub mod loss;
pub mod optim;
pub mod tensor;
pub mod train;
pub mod unet;

pub use loss::{smsle_loss, SMSLE_EPS};
pub use optim::{AdamConfig, AdamState};
pub use tensor::Tensor3;
pub use train::{predict, train, EpochRecord, TrainConfig, TrainHistory, TrainState};
pub use unet::{he_normal_init, ParamTensor, UNetConfig, UNetLayout, UNetParams};
