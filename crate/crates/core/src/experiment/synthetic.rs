//! Two-Gaussian synthetic tabular data with a chosen class imbalance.

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::numeric::{Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub positive_fraction: f64,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    pub class_separation: f64,
    /// Fixed data seed; when absent the data is drawn from the run's master seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn default_feature_dim() -> usize {
    10
}

impl SyntheticSpec {
    pub fn new(n_samples: usize, positive_fraction: f64, class_separation: f64) -> Self {
        Self {
            n_samples,
            positive_fraction,
            feature_dim: default_feature_dim(),
            class_separation,
            seed: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 20 {
            return Err(Error::Validation(format!(
                "synthetic data needs at least 20 samples, got {}",
                self.n_samples
            )));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "positive fraction must lie in (0, 1), got {}",
                self.positive_fraction
            )));
        }
        let pos = self.positive_count();
        if pos == 0 || pos == self.n_samples {
            return Err(Error::Validation(format!(
                "positive fraction {} leaves a class empty at n = {}",
                self.positive_fraction, self.n_samples
            )));
        }
        if self.feature_dim == 0 {
            return Err(Error::Validation("feature_dim must be at least 1".into()));
        }
        if !(self.class_separation >= 0.0 && self.class_separation.is_finite()) {
            return Err(Error::Validation(format!(
                "class separation must be finite and non-negative, got {}",
                self.class_separation
            )));
        }
        Ok(())
    }

    pub fn positive_count(&self) -> usize {
        (self.n_samples as f64 * self.positive_fraction).round() as usize
    }
}

/// Unit-covariance Gaussians centred at `±(sep/2)·1/√d`, so the class means are
/// `class_separation` apart. Exactly `round(n·p)` samples are positive, in
/// random order.
pub fn generate_synthetic(name: &str, spec: &SyntheticSpec, rng: &mut Rng) -> Result<TabularDataset> {
    spec.validate()?;
    let n = spec.n_samples;
    let d = spec.feature_dim;
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < spec.positive_count())).collect();
    rng.shuffle(&mut labels);
    let offset = 0.5 * spec.class_separation / (d as f64).sqrt();
    let mut data = Vec::with_capacity(n * d);
    for &y in &labels {
        let mu = if y == 1 { offset } else { -offset };
        for _ in 0..d {
            data.push(mu + rng.normal());
        }
    }
    TabularDataset::binary(name, Matrix::from_vec(n, d, data), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framingham_profile_counts() {
        let spec = SyntheticSpec::new(4240, 0.1519, 1.0);
        let ds = generate_synthetic("f", &spec, &mut Rng::new(1)).unwrap();
        // 4240 · 0.1519 = 644.06
        assert_eq!(ds.class_counts(), &[3596, 644]);
        assert_eq!(ds.num_features(), 10);
    }

    #[test]
    fn same_seed_same_data() {
        let spec = SyntheticSpec::new(100, 0.3, 2.0);
        let a = generate_synthetic("a", &spec, &mut Rng::new(5)).unwrap();
        let b = generate_synthetic("a", &spec, &mut Rng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_means_are_separated() {
        let spec = SyntheticSpec {
            feature_dim: 4,
            ..SyntheticSpec::new(20_000, 0.5, 3.0)
        };
        let ds = generate_synthetic("s", &spec, &mut Rng::new(2)).unwrap();
        let mut mean = [[0.0; 4]; 2];
        for r in 0..ds.len() {
            for (m, v) in mean[ds.y[r] as usize].iter_mut().zip(ds.x.row(r)) {
                *m += v / 10_000.0;
            }
        }
        let dist: f64 = (0..4).map(|j| (mean[1][j] - mean[0][j]).powi(2)).sum::<f64>().sqrt();
        assert!((dist - 3.0).abs() < 0.1, "{dist}");
    }

    #[test]
    fn degenerate_specs_rejected() {
        for spec in [
            SyntheticSpec::new(10, 0.5, 1.0),
            SyntheticSpec::new(100, 0.0, 1.0),
            SyntheticSpec::new(100, 1.0, 1.0),
            SyntheticSpec::new(100, 0.001, 1.0),
            SyntheticSpec::new(100, 0.5, -1.0),
        ] {
            assert!(spec.validate().is_err(), "{spec:?}");
        }
    }

    #[test]
    fn zero_separation_is_unlearnable() {
        use crate::metrics::evaluate;
        use crate::model::{init_params_with_hidden, train_local, LocalTraining};
        use crate::sampler::MixRegime;

        let spec = SyntheticSpec::new(1200, 0.5, 0.0);
        let train = generate_synthetic("train", &spec, &mut Rng::new(1)).unwrap();
        let test = generate_synthetic("test", &spec, &mut Rng::new(2)).unwrap();
        let init = init_params_with_hidden(&mut Rng::new(3), 10, 16);
        let cfg = LocalTraining {
            regime: MixRegime::NoMix,
            epochs: 10,
            batch_size: 24,
            lr: 0.004,
        };
        let trained = train_local(&init, &train, &cfg, &mut Rng::new(4)).unwrap();
        let acc = evaluate(&trained.params, &test).unwrap().accuracy;
        assert!((42.0..58.0).contains(&acc), "{acc}");
    }
}
