//! Mean imputation and z-scoring, fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::dataset::{RawTable, TabularDataset};
use super::schema::{FeatureKind, FeatureSpec};

/// Standard deviations below this are treated as a constant column.
const MIN_STD: f64 = 1e-12;

/// Per-feature statistics of a training table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub features: Vec<FeatureSpec>,
    /// Mean of the observed values; also the imputation value.
    pub mean: Vec<f64>,
    /// Population standard deviation of the imputed column.
    pub std: Vec<f64>,
    /// Number of rows the statistics were fitted on.
    pub fitted_rows: usize,
}

impl Preprocessor {
    pub fn fit(train: &RawTable) -> Result<Self> {
        let m = train.features.len();
        let mut mean = vec![0.0; m];
        let mut std = vec![0.0; m];
        for j in 0..m {
            let observed: Vec<f64> = train.rows.iter().filter_map(|r| r[j]).collect();
            if observed.is_empty() {
                return Err(Error::data(
                    &train.name,
                    format!("feature `{}` has no observed values", train.features[j].name),
                ));
            }
            let mu = observed.iter().sum::<f64>() / observed.len() as f64;
            // Imputed cells sit exactly at the mean and add nothing to the sum.
            let ss: f64 = observed.iter().map(|v| (v - mu) * (v - mu)).sum();
            mean[j] = mu;
            std[j] = (ss / train.len() as f64).sqrt();
        }
        Ok(Self {
            features: train.features.clone(),
            mean,
            std,
            fitted_rows: train.len(),
        })
    }

    /// Imputes missing cells with the fitted mean, z-scores continuous
    /// features (constant ones become all-zero) and leaves binary ones unscaled.
    pub fn apply(&self, raw: &RawTable) -> Result<TabularDataset> {
        if raw.features != self.features {
            return Err(Error::Schema(format!(
                "{}: feature list differs from the fitted preprocessor",
                raw.name
            )));
        }
        let m = self.features.len();
        let mut data = Vec::with_capacity(raw.len() * m);
        for row in &raw.rows {
            for (j, cell) in row.iter().enumerate() {
                let v = cell.unwrap_or(self.mean[j]);
                let v = match self.features[j].kind {
                    FeatureKind::Binary => v,
                    FeatureKind::Continuous if self.std[j] < MIN_STD => 0.0,
                    FeatureKind::Continuous => (v - self.mean[j]) / self.std[j],
                };
                data.push(v);
            }
        }
        TabularDataset::binary(
            raw.name.clone(),
            Matrix::from_vec(raw.len(), m, data),
            raw.labels.clone(),
        )
    }
}

pub fn fit_preprocessor(train: &RawTable) -> Result<Preprocessor> {
    Preprocessor::fit(train)
}

pub fn apply_preprocessor(stats: &Preprocessor, raw: &RawTable) -> Result<TabularDataset> {
    stats.apply(raw)
}
