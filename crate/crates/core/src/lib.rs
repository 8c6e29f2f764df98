//! Deterministic simulator for training a small MLP on class-imbalanced
//! tabular data under three data regimes (no mixing, MixUp, Balanced-MixUp),
//! both locally and across clients with federated averaging.
//!
//! Module map:
//!
//! - [`numeric`]: dense `f64` matrices and the seeded ChaCha8 generator
//!   with uniform, normal and Beta draws.
//! - [`data`]: CSV loading against the shared ten-feature schema,
//!   stratified split, train-fitted imputation and z-scoring.
//! - [`sampler`]: per-epoch batches for each [`sampler::MixRegime`].
//! - [`model`]: the 2×128 ReLU MLP, backpropagation, Adam, checkpoints.
//! - [`federation`]: FedAvg and the round loop.
//! - [`metrics`]: confusion matrix, accuracy, F-score.
//! - [`experiment`]: grid runners and CSV/Markdown output used by the CLI.

pub mod data;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod metrics;
pub mod model;
pub mod numeric;
pub mod sampler;

pub use error::{Error, Result};
