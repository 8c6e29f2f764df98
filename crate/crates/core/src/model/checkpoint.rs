//! JSON checkpoint format.
//!
//! ```json
//! {
//!   "format": "fedmix-mlp",
//!   "version": 1,
//!   "tensors": [
//!     {"name": "w1", "shape": [10, 128], "data": [ ... row-major ... ]},
//!     ...
//!   ]
//! }
//! ```
//!
//! Tensors appear in the order `w1, b1, w2, b2, w3, b3`. Numbers are written
//! with shortest round-trip formatting, so reloading is bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::mlp::{MlpParams, TENSOR_NAMES};

pub const CHECKPOINT_FORMAT: &str = "fedmix-mlp";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    tensors: Vec<NamedTensor>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

pub fn to_json(params: &MlpParams) -> String {
    let ckpt = Checkpoint {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        tensors: TENSOR_NAMES
            .iter()
            .zip(params.tensors())
            .map(|(name, t)| NamedTensor {
                name: (*name).into(),
                shape: [t.rows(), t.cols()],
                data: t.as_slice().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string(&ckpt).expect("checkpoint serialization is infallible")
}

pub fn from_json(text: &str) -> Result<MlpParams> {
    let ckpt: Checkpoint =
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("checkpoint: {e}")))?;
    if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported checkpoint {} v{}",
            ckpt.format, ckpt.version
        )));
    }
    if ckpt.tensors.len() != TENSOR_NAMES.len() {
        return Err(Error::Schema(format!("checkpoint has {} tensors", ckpt.tensors.len())));
    }
    let mut mats = Vec::with_capacity(6);
    for (t, expected) in ckpt.tensors.into_iter().zip(TENSOR_NAMES) {
        if t.name != expected {
            return Err(Error::Schema(format!("expected tensor `{expected}`, found `{}`", t.name)));
        }
        if t.data.len() != t.shape[0] * t.shape[1] {
            return Err(Error::Schema(format!("tensor `{}` data does not match its shape", t.name)));
        }
        mats.push(Matrix::from_vec(t.shape[0], t.shape[1], t.data));
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().expect("six tensors");
    let params = MlpParams {
        w1: next(),
        b1: next(),
        w2: next(),
        b2: next(),
        w3: next(),
        b3: next(),
    };
    let (m, h) = (params.input_dim(), params.hidden());
    if !params.same_shape(&MlpParams::zeros(m, h)) {
        return Err(Error::Schema("checkpoint tensor shapes are inconsistent".into()));
    }
    Ok(params)
}

pub fn save(params: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_json(params)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<MlpParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
