//! Tensors, parameters and the forward/backward passes of the network.

pub mod backward;
pub mod forward;
pub mod gradcheck;
pub mod params;
pub mod tensor;
pub mod wide;

pub use backward::model_backward;
pub use forward::{
    attention_forward, bigru_forward, cross_entropy, cross_entropy_with_logits, entropy, gru_cell, model_forward,
    output_forward, DropoutRates, ForwardPass, Mode,
};
pub use params::{Gradients, Layers, ModelConfig, ModelParams, NUM_LEVELS};
pub use tensor::{Scalar, Tensor};
