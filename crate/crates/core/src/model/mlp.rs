//! Two-hidden-layer ReLU MLP with a sigmoid output unit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

pub const DEFAULT_HIDDEN: usize = 128;

/// Clamp applied to probabilities before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// All trainable tensors. Weights are `fan_in × fan_out`, biases `1 × fan_out`.
///
/// The same type carries gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub w1: Matrix,
    pub b1: Matrix,
    pub w2: Matrix,
    pub b2: Matrix,
    pub w3: Matrix,
    pub b3: Matrix,
}

pub type Gradients = MlpParams;

pub const TENSOR_NAMES: [&str; 6] = ["w1", "b1", "w2", "b2", "w3", "b3"];

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w1: Matrix::zeros(input_dim, hidden),
            b1: Matrix::zeros(1, hidden),
            w2: Matrix::zeros(hidden, hidden),
            b2: Matrix::zeros(1, hidden),
            w3: Matrix::zeros(hidden, 1),
            b3: Matrix::zeros(1, 1),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.rows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.cols()
    }

    pub fn tensors(&self) -> [&Matrix; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn tensors_mut(&mut self) -> [&mut Matrix; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.as_slice().len()).sum()
    }

    /// All parameters concatenated in tensor order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.as_slice().iter().copied()).collect()
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.tensors()
            .iter()
            .zip(other.tensors())
            .all(|(a, b)| a.shape() == b.shape())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "forward",
                expected: format!("{} input columns", self.input_dim()),
                actual: x.cols().to_string(),
            });
        }
        Ok(())
    }
}

/// Glorot-uniform weights, zero biases, with the default hidden width.
pub fn init_params(rng: &mut Rng, input_dim: usize) -> MlpParams {
    init_params_with_hidden(rng, input_dim, DEFAULT_HIDDEN)
}

/// Weights ~ U(−s, s) with `s = sqrt(6 / (fan_in + fan_out))`; biases zero.
pub fn init_params_with_hidden(rng: &mut Rng, input_dim: usize, hidden: usize) -> MlpParams {
    assert!(input_dim >= 1 && hidden >= 1, "layer widths must be positive");
    let mut p = MlpParams::zeros(input_dim, hidden);
    for w in [&mut p.w1, &mut p.w2, &mut p.w3] {
        let s = (6.0 / (w.rows() + w.cols()) as f64).sqrt();
        for v in w.as_mut_slice() {
            *v = (2.0 * rng.uniform() - 1.0) * s;
        }
    }
    p
}

fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // Keep the output strictly inside (0, 1) even when the logit saturates.
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn relu_inplace(m: &mut Matrix) {
    for v in m.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Intermediate activations kept for backpropagation.
struct Activations {
    h1: Matrix,
    h2: Matrix,
    probs: Vec<f64>,
}

fn forward_cached(params: &MlpParams, x: &Matrix) -> Activations {
    let mut h1 = x.matmul(&params.w1);
    h1.add_row_broadcast(&params.b1);
    relu_inplace(&mut h1);
    let mut h2 = h1.matmul(&params.w2);
    h2.add_row_broadcast(&params.b2);
    relu_inplace(&mut h2);
    let mut logits = h2.matmul(&params.w3);
    logits.add_row_broadcast(&params.b3);
    let probs = logits.as_slice().iter().map(|&z| sigmoid(z)).collect();
    Activations { h1, h2, probs }
}

/// Predicted probabilities of the positive class, one per row of `x`.
pub fn forward(params: &MlpParams, x: &Matrix) -> Result<Vec<f64>> {
    params.check_input(x)?;
    Ok(forward_cached(params, x).probs)
}

/// Mean binary cross-entropy; targets may be soft.
pub fn bce_loss(probs: &[f64], targets: &[f64]) -> Result<f64> {
    if probs.len() != targets.len() || probs.is_empty() {
        return Err(Error::Shape {
            op: "bce_loss",
            expected: format!("{} targets", probs.len()),
            actual: targets.len().to_string(),
        });
    }
    let total: f64 = probs
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Gradient of `bce_loss(forward(params, x), targets)` with respect to every
/// parameter, plus the loss itself.
pub fn backward(params: &MlpParams, x: &Matrix, targets: &[f64]) -> Result<(Gradients, f64)> {
    params.check_input(x)?;
    if targets.len() != x.rows() || targets.is_empty() {
        return Err(Error::Shape {
            op: "backward",
            expected: format!("{} targets", x.rows()),
            actual: targets.len().to_string(),
        });
    }
    let act = forward_cached(params, x);
    let loss = bce_loss(&act.probs, targets)?;
    let n = targets.len() as f64;

    // Sigmoid + BCE collapse to (ŷ − y) at the logit.
    let delta3 = Matrix::from_vec(
        targets.len(),
        1,
        act.probs.iter().zip(targets).map(|(p, y)| (p - y) / n).collect(),
    );
    let w3 = act.h2.t_matmul(&delta3);
    let b3 = delta3.sum_rows();

    let mut delta2 = delta3.matmul_t(&params.w3);
    mask_relu(&mut delta2, &act.h2);
    let w2 = act.h1.t_matmul(&delta2);
    let b2 = delta2.sum_rows();

    let mut delta1 = delta2.matmul_t(&params.w2);
    mask_relu(&mut delta1, &act.h1);
    let w1 = x.t_matmul(&delta1);
    let b1 = delta1.sum_rows();

    Ok((MlpParams { w1, b1, w2, b2, w3, b3 }, loss))
}

/// Zeroes gradient entries where the ReLU output was zero.
fn mask_relu(delta: &mut Matrix, activation: &Matrix) {
    for (d, &a) in delta.as_mut_slice().iter_mut().zip(activation.as_slice()) {
        if a <= 0.0 {
            *d = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_batch(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| 2.0 * rng.normal()).collect())
    }

    #[test]
    fn init_respects_glorot_bound_and_zero_bias() {
        let p = init_params(&mut Rng::new(1), 10);
        assert_eq!(p.w1.shape(), (10, 128));
        assert_eq!(p.w2.shape(), (128, 128));
        assert_eq!(p.w3.shape(), (128, 1));
        let bound = (6.0f64 / 138.0).sqrt();
        assert!((bound - 0.2085).abs() < 1e-4);
        assert!(p.w1.as_slice().iter().all(|w| w.abs() <= bound));
        for b in [&p.b1, &p.b2, &p.b3] {
            assert!(b.as_slice().iter().all(|&v| v == 0.0));
        }
        assert_eq!(p, init_params(&mut Rng::new(1), 10));
    }

    #[test]
    fn zero_params_predict_one_half() {
        let p = MlpParams::zeros(10, 128);
        let x = random_batch(&mut Rng::new(2), 24, 10);
        let probs = forward(&p, &x).unwrap();
        assert_eq!(probs.len(), 24);
        assert!(probs.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn outputs_strictly_inside_unit_interval() {
        let mut p = init_params(&mut Rng::new(3), 10);
        p.b3.set(0, 0, 1e4);
        let x = random_batch(&mut Rng::new(4), 8, 10);
        assert!(forward(&p, &x).unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
        p.b3.set(0, 0, -1e4);
        assert!(forward(&p, &x).unwrap().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = MlpParams::zeros(10, 4);
        assert!(forward(&p, &Matrix::zeros(3, 9)).is_err());
    }

    #[test]
    fn bce_reference_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((bce_loss(&[0.5], &[1.0]).unwrap() - ln2).abs() < 1e-12);
        assert!((bce_loss(&[0.5], &[0.5]).unwrap() - ln2).abs() < 1e-12);
        let v = bce_loss(&[0.9, 0.1], &[1.0, 0.0]).unwrap();
        assert!((v - (-(0.9f64).ln())).abs() < 1e-12);
        assert!((v - 0.1054).abs() < 1e-4);
        assert!(bce_loss(&[0.5], &[1.0, 0.0]).is_err());
        assert!(bce_loss(&[0.0], &[1.0]).unwrap().is_finite());
    }

    #[test]
    fn output_delta_vanishes_at_target() {
        let p = init_params_with_hidden(&mut Rng::new(5), 4, 8);
        let x = random_batch(&mut Rng::new(6), 5, 4);
        let targets = forward(&p, &x).unwrap();
        let (g, _) = backward(&p, &x, &targets).unwrap();
        assert!(g.b3.get(0, 0).abs() < 1e-15);
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let p = init_params_with_hidden(&mut Rng::new(7), 4, 8);
        let x = random_batch(&mut Rng::new(8), 3, 4);
        let y = vec![1.0, 0.0, 0.3];
        let (g, _) = backward(&p, &x, &y).unwrap();
        let x2 = x.select_rows(&[0, 1, 2, 0, 1, 2]);
        let y2: Vec<f64> = y.iter().chain(&y).copied().collect();
        let (g2, _) = backward(&p, &x2, &y2).unwrap();
        for (a, b) in g.flatten().iter().zip(g2.flatten()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn forward_is_row_permutation_equivariant() {
        let p = init_params(&mut Rng::new(9), 10);
        let x = random_batch(&mut Rng::new(10), 6, 10);
        let perm = [3, 0, 5, 1, 4, 2];
        let out = forward(&p, &x).unwrap();
        let out_perm = forward(&p, &x.select_rows(&perm)).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert_eq!(out_perm[k], out[i]);
        }
    }
}
