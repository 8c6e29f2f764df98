//! Dense linear algebra and seeded random generation.

mod matrix;
mod rng;

pub use matrix::{elementwise, matmul, transpose, zipwise, Matrix};
pub use rng::{beta_sample, uniform, Rng};
