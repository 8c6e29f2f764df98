//! Per-epoch training batches under the three data regimes.
//!
//! - `NoMix` emits shuffled minibatches unchanged.
//! - `MixUp(α)` pairs two independent shuffles of the training set and mixes
//!   them row by row with λ ~ Beta(α, α).
//! - `BalancedMixUp(α)` pairs a shuffled minibatch (class probability
//!   `n_c / N`) with an equally sized class-uniform draw (probability `1 / C`)
//!   and mixes with λ ~ Beta(α, 1). λ weights the shuffled sample.
//!
//! Every regime emits `⌈N / batch_size⌉` batches per epoch, so the number of
//! gradient steps does not depend on the regime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::numeric::{beta_sample, Matrix, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixRegime {
    NoMix,
    MixUp { alpha: f64 },
    BalancedMixUp { alpha: f64 },
}

impl MixRegime {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MixRegime::NoMix => Ok(()),
            MixRegime::MixUp { alpha } | MixRegime::BalancedMixUp { alpha } => {
                if alpha > 0.0 && alpha.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Validation(format!("alpha must be > 0, got {alpha}")))
                }
            }
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            MixRegime::NoMix => None,
            MixRegime::MixUp { alpha } | MixRegime::BalancedMixUp { alpha } => Some(alpha),
        }
    }

    /// Short identifier used in result tables: `none`, `mixup`, `balanced`.
    pub fn key(&self) -> &'static str {
        match self {
            MixRegime::NoMix => "none",
            MixRegime::MixUp { .. } => "mixup",
            MixRegime::BalancedMixUp { .. } => "balanced",
        }
    }

    /// Builds a regime from its short identifier.
    pub fn from_key(key: &str, alpha: Option<f64>) -> Result<Self> {
        let need_alpha = || {
            alpha.ok_or_else(|| Error::Validation(format!("regime `{key}` requires an alpha")))
        };
        let regime = match key {
            "none" | "nomix" | "no-mixup" => MixRegime::NoMix,
            "mixup" => MixRegime::MixUp { alpha: need_alpha()? },
            "balanced" | "bal-mixup" | "balanced-mixup" => MixRegime::BalancedMixUp { alpha: need_alpha()? },
            other => return Err(Error::Validation(format!("unknown regime `{other}`"))),
        };
        regime.validate()?;
        Ok(regime)
    }
}

impl fmt::Display for MixRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixRegime::NoMix => write!(f, "No MixUp"),
            MixRegime::MixUp { alpha } => write!(f, "MixUp (α={alpha})"),
            MixRegime::BalancedMixUp { alpha } => write!(f, "Bal-MixUp (α={alpha})"),
        }
    }
}

/// Features and (possibly soft) targets for one gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub x: Matrix,
    pub y_soft: Vec<f64>,
}

impl TrainBatch {
    pub fn new(x: Matrix, y_soft: Vec<f64>) -> Result<Self> {
        if x.rows() != y_soft.len() {
            return Err(Error::Shape {
                op: "TrainBatch::new",
                expected: format!("{} targets", x.rows()),
                actual: y_soft.len().to_string(),
            });
        }
        if let Some(bad) = y_soft.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(Error::Config(format!("target {bad} outside [0, 1]")));
        }
        Ok(Self { x, y_soft })
    }

    pub fn gather(dataset: &TabularDataset, indices: &[usize]) -> Self {
        Self {
            x: dataset.x.select_rows(indices),
            y_soft: indices.iter().map(|&i| f64::from(dataset.y[i])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.y_soft.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_soft.is_empty()
    }
}

/// A random permutation of `0..N` cut into `⌈N / batch_size⌉` chunks; the last
/// chunk may be short.
pub fn instance_stream(dataset: &TabularDataset, batch_size: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::data(&dataset.name, "cannot sample from an empty dataset"));
    }
    let mut perm: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut perm);
    Ok(perm.chunks(batch_size).map(<[usize]>::to_vec).collect())
}

/// `count` indices drawn with replacement: a class chosen uniformly, then a
/// member of that class chosen uniformly.
pub fn class_uniform_sample(dataset: &TabularDataset, count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    class_uniform_from(&dataset.class_indices(), &dataset.name, count, rng)
}

fn class_uniform_from(members: &[Vec<usize>], name: &str, count: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::Config("class-uniform sample count must be at least 1".into()));
    }
    if let Some(c) = members.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!(
            "{name}: class {c} is empty; class-uniform sampling needs every class"
        )));
    }
    Ok((0..count)
        .map(|_| {
            let class = &members[rng.below(members.len())];
            class[rng.below(class.len())]
        })
        .collect())
}

/// Row-wise convex combination `λ·a + (1 − λ)·b` of features and targets.
pub fn mix(batch_i: &TrainBatch, batch_j: &TrainBatch, lambdas: &[f64]) -> Result<TrainBatch> {
    if batch_i.x.shape() != batch_j.x.shape() || batch_i.len() != batch_j.len() {
        return Err(Error::Shape {
            op: "mix",
            expected: format!("{:?}", batch_i.x.shape()),
            actual: format!("{:?}", batch_j.x.shape()),
        });
    }
    if lambdas.len() != batch_i.len() {
        return Err(Error::Shape {
            op: "mix",
            expected: format!("{} lambdas", batch_i.len()),
            actual: lambdas.len().to_string(),
        });
    }
    if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Config(format!("mixing coefficient {bad} outside [0, 1]")));
    }
    let (rows, cols) = batch_i.x.shape();
    let mut x = Matrix::zeros(rows, cols);
    let mut y = Vec::with_capacity(rows);
    for (r, &lam) in lambdas.iter().enumerate() {
        let (xi, xj) = (batch_i.x.row(r), batch_j.x.row(r));
        for ((out, &a), &b) in x.row_mut(r).iter_mut().zip(xi).zip(xj) {
            *out = convex(lam, a, b);
        }
        y.push(convex(lam, batch_i.y_soft[r], batch_j.y_soft[r]));
    }
    Ok(TrainBatch { x, y_soft: y })
}

/// `λa + (1−λ)b`, exact at both endpoints and never outside `[min, max]`
/// despite rounding.
#[inline]
fn convex(lam: f64, a: f64, b: f64) -> f64 {
    if lam == 1.0 {
        a
    } else if lam == 0.0 {
        b
    } else {
        (lam * a + (1.0 - lam) * b).clamp(a.min(b), a.max(b))
    }
}

fn draw_lambdas(rng: &mut Rng, n: usize, a: f64, b: f64) -> Result<Vec<f64>> {
    (0..n).map(|_| beta_sample(rng, a, b)).collect()
}

/// One epoch of training batches under `regime`.
pub fn epoch_batches(
    dataset: &TabularDataset,
    regime: MixRegime,
    batch_size: usize,
    rng: &mut Rng,
) -> Result<Vec<TrainBatch>> {
    regime.validate()?;
    let primary = instance_stream(dataset, batch_size, rng)?;
    match regime {
        MixRegime::NoMix => Ok(primary.iter().map(|idx| TrainBatch::gather(dataset, idx)).collect()),
        MixRegime::MixUp { alpha } => {
            let partner = instance_stream(dataset, batch_size, rng)?;
            primary
                .iter()
                .zip(&partner)
                .map(|(i_idx, j_idx)| {
                    let bi = TrainBatch::gather(dataset, i_idx);
                    let bj = TrainBatch::gather(dataset, j_idx);
                    let lambdas = draw_lambdas(rng, bi.len(), alpha, alpha)?;
                    mix(&bi, &bj, &lambdas)
                })
                .collect()
        }
        MixRegime::BalancedMixUp { alpha } => {
            let members = dataset.class_indices();
            primary
                .iter()
                .map(|i_idx| {
                    let j_idx = class_uniform_from(&members, &dataset.name, i_idx.len(), rng)?;
                    let bi = TrainBatch::gather(dataset, i_idx);
                    let bj = TrainBatch::gather(dataset, &j_idx);
                    let lambdas = draw_lambdas(rng, bi.len(), alpha, 1.0)?;
                    mix(&bi, &bj, &lambdas)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use crate::numeric::Rng;

    fn dataset(n: usize, positives: usize) -> TabularDataset {
        let x = Matrix::from_vec(n, 2, (0..2 * n).map(|v| v as f64).collect());
        let y = (0..n).map(|i| u8::from(i < positives)).collect();
        TabularDataset::binary("toy", x, y).unwrap()
    }

    #[test]
    fn stream_chunking() {
        let mut rng = Rng::new(0);
        let sizes: Vec<usize> = instance_stream(&dataset(48, 10), 24, &mut rng).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![24, 24]);
        let sizes: Vec<usize> = instance_stream(&dataset(50, 10), 24, &mut rng).unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![24, 24, 2]);
    }

    #[test]
    fn stream_is_a_permutation() {
        let batches = instance_stream(&dataset(53, 10), 7, &mut Rng::new(1)).unwrap();
        let mut all: Vec<usize> = batches.into_iter().flatten().collect();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
    }

    #[test]
    fn stream_rejects_zero_batch() {
        assert!(instance_stream(&dataset(5, 1), 0, &mut Rng::new(0)).is_err());
    }

    #[test]
    fn class_uniform_balances_classes() {
        let ds = dataset(100, 5);
        let draws = class_uniform_sample(&ds, 100_000, &mut Rng::new(2)).unwrap();
        let ones = draws.iter().filter(|&&i| ds.y[i] == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.005, "{ones}");
    }

    #[test]
    fn class_uniform_single_class() {
        let ds = TabularDataset::new("one", Matrix::zeros(4, 1), vec![0; 4], 1).unwrap();
        let draws = class_uniform_sample(&ds, 50, &mut Rng::new(3)).unwrap();
        assert!(draws.iter().all(|&i| ds.y[i] == 0 && i < 4));
    }

    #[test]
    fn class_uniform_rejects_empty_class() {
        let ds = dataset(10, 0);
        assert!(class_uniform_sample(&ds, 5, &mut Rng::new(4)).is_err());
    }

    #[test]
    fn mix_endpoints_and_hand_value() {
        let bi = TrainBatch::new(Matrix::from_rows(&[[2.0, 0.0]]), vec![1.0]).unwrap();
        let bj = TrainBatch::new(Matrix::from_rows(&[[0.0, 2.0]]), vec![0.0]).unwrap();
        assert_eq!(mix(&bi, &bj, &[1.0]).unwrap(), bi);
        assert_eq!(mix(&bi, &bj, &[0.0]).unwrap(), bj);
        let m = mix(&bi, &bj, &[0.25]).unwrap();
        assert_eq!(m.x.row(0), &[0.5, 1.5]);
        assert_eq!(m.y_soft, vec![0.25]);
    }

    #[test]
    fn mix_rejects_shape_mismatch() {
        let bi = TrainBatch::new(Matrix::zeros(2, 2), vec![0.0, 1.0]).unwrap();
        let bj = TrainBatch::new(Matrix::zeros(1, 2), vec![0.0]).unwrap();
        assert!(mix(&bi, &bj, &[0.5, 0.5]).is_err());
        assert!(mix(&bi, &bi, &[0.5]).is_err());
        assert!(mix(&bi, &bi, &[0.5, 1.5]).is_err());
    }

    #[test]
    fn nomix_epoch_is_the_training_set() {
        let ds = dataset(100, 13);
        let batches = epoch_batches(&ds, MixRegime::NoMix, 24, &mut Rng::new(5)).unwrap();
        assert_eq!(batches.len(), 5);
        let mut rows: Vec<(Vec<u64>, u64)> = batches
            .iter()
            .flat_map(|b| (0..b.len()).map(move |r| (b.x.row(r).iter().map(|v| v.to_bits()).collect(), b.y_soft[r].to_bits())))
            .collect();
        let mut expected: Vec<(Vec<u64>, u64)> = (0..ds.len())
            .map(|r| (ds.x.row(r).iter().map(|v| v.to_bits()).collect(), f64::from(ds.y[r]).to_bits()))
            .collect();
        rows.sort();
        expected.sort();
        assert_eq!(rows, expected);
        assert!(batches.iter().flat_map(|b| &b.y_soft).all(|&y| y == 0.0 || y == 1.0));
    }

    #[test]
    fn every_regime_has_the_same_step_count() {
        let ds = dataset(77, 9);
        for regime in [
            MixRegime::NoMix,
            MixRegime::MixUp { alpha: 0.1 },
            MixRegime::BalancedMixUp { alpha: 0.3 },
        ] {
            let b = epoch_batches(&ds, regime, 24, &mut Rng::new(6)).unwrap();
            assert_eq!(b.len(), 4, "{regime}");
            assert_eq!(b.iter().map(TrainBatch::len).sum::<usize>(), 77);
        }
    }

    #[test]
    fn mixup_is_seed_deterministic() {
        let ds = dataset(60, 9);
        let r = MixRegime::MixUp { alpha: 0.2 };
        let a = epoch_batches(&ds, r, 24, &mut Rng::new(7)).unwrap();
        let b = epoch_batches(&ds, r, 24, &mut Rng::new(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn balanced_mixup_mean_target() {
        // E[ỹ] = E[λ]·p + (1 − E[λ])·0.5 with p = 0.05 and E[λ] = 0.3/1.3.
        let lam: f64 = 0.3 / 1.3;
        let expected = lam * 0.05 + (1.0 - lam) * 0.5;
        assert!((expected - 0.396).abs() < 1e-3);
        let ds = dataset(2000, 100);
        let mut rng = Rng::new(8);
        let batches = epoch_batches(&ds, MixRegime::BalancedMixUp { alpha: 0.3 }, 24, &mut rng).unwrap();
        let ys: Vec<f64> = batches.iter().flat_map(|b| b.y_soft.iter().copied()).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        assert!((mean - expected).abs() < 0.03, "{mean}");
    }

    #[test]
    fn regime_keys_round_trip() {
        for r in [MixRegime::NoMix, MixRegime::MixUp { alpha: 0.1 }, MixRegime::BalancedMixUp { alpha: 0.3 }] {
            assert_eq!(MixRegime::from_key(r.key(), r.alpha()).unwrap(), r);
        }
        assert!(MixRegime::from_key("mixup", Some(0.0)).is_err());
        assert!(MixRegime::from_key("mixup", None).is_err());
        assert!(MixRegime::from_key("smote", None).is_err());
    }

    proptest! {
        #[test]
        fn mixed_rows_are_convex(
            a in prop::collection::vec(-5.0f64..5.0, 12),
            b in prop::collection::vec(-5.0f64..5.0, 12),
            ya in prop::collection::vec(0.0f64..=1.0, 4),
            yb in prop::collection::vec(0.0f64..=1.0, 4),
            lams in prop::collection::vec(0.0f64..=1.0, 4),
        ) {
            let bi = TrainBatch::new(Matrix::from_vec(4, 3, a), ya).unwrap();
            let bj = TrainBatch::new(Matrix::from_vec(4, 3, b), yb).unwrap();
            let m = mix(&bi, &bj, &lams).unwrap();
            for (k, v) in m.x.as_slice().iter().enumerate() {
                let (p, q) = (bi.x.as_slice()[k], bj.x.as_slice()[k]);
                prop_assert!(p.min(q) <= *v && *v <= p.max(q));
            }
            for r in 0..4 {
                let (p, q) = (bi.y_soft[r], bj.y_soft[r]);
                prop_assert!(p.min(q) <= m.y_soft[r] && m.y_soft[r] <= p.max(q));
            }
        }
    }
}
