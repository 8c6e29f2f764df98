//! Confusion-matrix metrics: accuracy and F-score (both in percent), plus
//! test-set BCE.

use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::model::{bce_loss, forward, MlpParams};

/// Probabilities at or above this are predicted positive.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Exchanges the roles of the two classes.
    pub fn swapped(&self) -> Self {
        Self {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }
}

pub fn confusion(probs: &[f64], labels: &[u8]) -> Result<ConfusionMatrix> {
    if probs.is_empty() {
        return Err(Error::Config("cannot evaluate an empty prediction set".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::Shape {
            op: "confusion",
            expected: format!("{} labels", probs.len()),
            actual: labels.len().to_string(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= THRESHOLD, y) {
            (true, 1) => cm.tp += 1,
            (false, 0) => cm.tn += 1,
            (true, 0) => cm.fp += 1,
            (false, 1) => cm.fn_ += 1,
            (_, other) => return Err(Error::Config(format!("label {other} is not binary"))),
        }
    }
    Ok(cm)
}

/// `100·(TP+TN)/total`.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Config("accuracy of an empty confusion matrix".into()));
    }
    Ok(100.0 * (cm.tp + cm.tn) as f64 / total as f64)
}

/// `100·2TP/(2TP+FP+FN)`, or 0 when there are no positives predicted or present.
pub fn f_score(cm: &ConfusionMatrix) -> f64 {
    let denom = 2 * cm.tp + cm.fp + cm.fn_;
    if denom == 0 {
        0.0
    } else {
        100.0 * (2 * cm.tp) as f64 / denom as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub loss: f64,
    pub accuracy: f64,
    pub f_score: f64,
    pub confusion: ConfusionMatrix,
}

/// Loss (hard labels), accuracy and F-score of `params` on `dataset`.
pub fn evaluate(params: &MlpParams, dataset: &TabularDataset) -> Result<MetricsReport> {
    let probs = forward(params, &dataset.x)?;
    let loss = bce_loss(&probs, &dataset.labels_f64())?;
    let cm = confusion(&probs, &dataset.y)?;
    Ok(MetricsReport {
        loss,
        accuracy: accuracy(&cm)?,
        f_score: f_score(&cm),
        confusion: cm,
    })
}
