use crate::error::{Error, Result};
use crate::numeric::Matrix;

use super::schema::FeatureSpec;

/// Rows parsed from a source file, before imputation and scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub name: String,
    pub features: Vec<FeatureSpec>,
    /// `None` marks a missing cell.
    pub rows: Vec<Vec<Option<f64>>>,
    pub labels: Vec<u8>,
    /// Non-empty cells that failed to parse as numbers (also counted as missing).
    pub unparsable_cells: usize,
    /// Rows dropped because the label was missing or unparsable.
    pub dropped_rows: usize,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn missing_cells(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        self.labels.iter().filter(|&&y| y == 1).count() as f64 / self.labels.len() as f64
    }

    /// Subset of rows in the given order.
    pub fn select(&self, indices: &[usize]) -> RawTable {
        RawTable {
            name: self.name.clone(),
            features: self.features.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            unparsable_cells: 0,
            dropped_rows: 0,
        }
    }
}

impl From<&TabularDataset> for RawTable {
    /// Treats every column as a continuous, fully observed feature.
    fn from(ds: &TabularDataset) -> Self {
        let features = (0..ds.num_features())
            .map(|i| FeatureSpec::new(format!("f{i}"), super::FeatureKind::Continuous))
            .collect();
        RawTable {
            name: ds.name.clone(),
            features,
            rows: (0..ds.len())
                .map(|r| ds.x.row(r).iter().map(|&v| Some(v)).collect())
                .collect(),
            labels: ds.y.clone(),
            unparsable_cells: 0,
            dropped_rows: 0,
        }
    }
}

/// Fully numeric dataset: features in `x`, hard labels in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub name: String,
    pub x: Matrix,
    pub y: Vec<u8>,
    num_classes: usize,
    class_counts: Vec<usize>,
}

impl TabularDataset {
    pub const BINARY: usize = 2;

    pub fn new(name: impl Into<String>, x: Matrix, y: Vec<u8>, num_classes: usize) -> Result<Self> {
        let name = name.into();
        if x.rows() != y.len() {
            return Err(Error::Shape {
                op: "TabularDataset::new",
                expected: format!("{} labels", x.rows()),
                actual: y.len().to_string(),
            });
        }
        if num_classes == 0 {
            return Err(Error::Config("num_classes must be at least 1".into()));
        }
        let mut class_counts = vec![0usize; num_classes];
        for &label in &y {
            let slot = class_counts.get_mut(label as usize).ok_or_else(|| {
                Error::data(&name, format!("label {label} outside 0..{num_classes}"))
            })?;
            *slot += 1;
        }
        if !x.is_finite() {
            return Err(Error::data(&name, "non-finite feature value"));
        }
        Ok(Self {
            name,
            x,
            y,
            num_classes,
            class_counts,
        })
    }

    pub fn binary(name: impl Into<String>, x: Matrix, y: Vec<u8>) -> Result<Self> {
        Self::new(name, x, y, Self::BINARY)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.x.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// `n_c` for each class `c`.
    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    /// Indices of the samples in each class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes];
        for (i, &label) in self.y.iter().enumerate() {
            out[label as usize].push(i);
        }
        out
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.y.iter().map(|&v| f64::from(v)).collect()
    }
}
