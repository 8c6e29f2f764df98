//! MLP classifier, analytic backpropagation, Adam, and local training.

mod adam;
pub mod checkpoint;
mod mlp;
mod train;

pub use adam::{adam_step, AdamState, BETA1, BETA2, EPSILON};
pub use mlp::{
    backward, bce_loss, forward, init_params, init_params_with_hidden, Gradients, MlpParams,
    DEFAULT_HIDDEN, PROB_CLAMP, TENSOR_NAMES,
};
pub use train::{steps_per_epoch, train_local, LocalTraining, Trained};
