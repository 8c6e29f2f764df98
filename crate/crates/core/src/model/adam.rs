use super::mlp::{Gradients, MlpParams};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates. Created fresh for every local training run.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: MlpParams,
    pub v: MlpParams,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(like: &MlpParams) -> Self {
        Self {
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
///
/// # Panics
/// If `grads` does not have the shape of `params`.
pub fn adam_step(params: &mut MlpParams, grads: &Gradients, state: &mut AdamState, lr: f64) {
    assert!(params.same_shape(grads), "adam_step: gradient shape mismatch");
    state.t += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let AdamState { m, v, .. } = state;
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(m.tensors_mut())
        .zip(v.tensors_mut())
    {
        let (p, g, m, v) = (p.as_mut_slice(), g.as_slice(), m.as_mut_slice(), v.as_mut_slice());
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Matrix, Rng};
    use crate::model::mlp::init_params_with_hidden;

    fn scalar(v: f64) -> MlpParams {
        let mut p = MlpParams::zeros(1, 1);
        p.b3 = Matrix::from_vec(1, 1, vec![v]);
        p
    }

    #[test]
    fn first_step_moves_each_component_by_lr() {
        let mut p = init_params_with_hidden(&mut Rng::new(1), 3, 4);
        let before = p.flatten();
        let mut g = p.zeros_like();
        for (k, v) in g.w2.as_mut_slice().iter_mut().enumerate() {
            *v = if k % 2 == 0 { 0.37 } else { -2.5 };
        }
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &g, &mut state, 0.01);
        assert_eq!(state.t, 1);
        let w2_before = &before[12 + 4..12 + 4 + 16];
        for (k, (a, b)) in p.w2.as_slice().iter().zip(w2_before).enumerate() {
            let expected = if k % 2 == 0 { -0.01 } else { 0.01 };
            assert!(((a - b) - expected).abs() < 1e-8, "{}", a - b);
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = init_params_with_hidden(&mut Rng::new(2), 3, 4);
        let before = p.clone();
        let g = p.zeros_like();
        let mut state = AdamState::new(&p);
        for _ in 0..50 {
            adam_step(&mut p, &g, &mut state, 0.1);
        }
        assert_eq!(p, before);
        assert!(state.v.flatten().iter().all(|&v| v >= 0.0));
    }

    /// Plain scalar Adam written independently of the tensor code.
    fn reference_adam(theta0: f64, lr: f64, steps: usize) -> Vec<f64> {
        let (mut theta, mut m, mut v) = (theta0, 0.0, 0.0);
        let mut out = vec![theta];
        for t in 1..=steps {
            let g = 2.0 * theta;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t as i32));
            let vh = v / (1.0 - 0.999f64.powi(t as i32));
            theta -= lr * mh / (vh.sqrt() + 1e-8);
            out.push(theta);
        }
        out
    }

    #[test]
    fn quadratic_descent_matches_reference() {
        let reference = reference_adam(1.0, 0.1, 20);
        assert!((reference[1] - 0.9).abs() < 1e-8);
        assert!(reference[..11].windows(2).all(|w| w[1] < w[0]));
        assert!(reference[12] < 0.0, "momentum carries past the minimum");
        let mut p = scalar(1.0);
        let mut state = AdamState::new(&p);
        let mut trace = vec![1.0];
        for _ in 0..20 {
            let theta = p.b3.get(0, 0);
            let g = scalar(2.0 * theta);
            adam_step(&mut p, &g, &mut state, 0.1);
            trace.push(p.b3.get(0, 0));
        }
        for (a, b) in trace.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }
}
