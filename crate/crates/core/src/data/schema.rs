//! Shared feature schema and per-dataset column maps.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// The ten features common to all four heart-disease sources, in column order.
pub const CANONICAL_FEATURES: [(&str, FeatureKind); 10] = [
    ("age", FeatureKind::Continuous),
    ("male", FeatureKind::Binary),
    ("hyp", FeatureKind::Binary),
    ("smoker", FeatureKind::Binary),
    ("cigsperday", FeatureKind::Continuous),
    ("diabetes", FeatureKind::Binary),
    ("chol", FeatureKind::Continuous),
    ("heartRate", FeatureKind::Continuous),
    ("sysBP", FeatureKind::Continuous),
    ("diaBP", FeatureKind::Continuous),
];

pub fn canonical_features() -> Vec<FeatureSpec> {
    CANONICAL_FEATURES
        .iter()
        .map(|&(n, k)| FeatureSpec::new(n, k))
        .collect()
}

/// On-disk column map for one dataset (`*.schema.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub dataset_name: String,
    pub label_column: String,
    /// source column name → canonical feature name
    pub columns: BTreeMap<String, String>,
    /// Cell values treated as missing in addition to empty/unparsable cells
    /// (e.g. `-9` in the raw UCI files).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_values: Vec<String>,
}

impl SchemaMap {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))
    }
}

/// A validated schema: target feature list plus the map from one dataset's
/// source columns onto it.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    features: Vec<FeatureSpec>,
    map: SchemaMap,
    /// For each target feature, the source column that feeds it.
    sources: Vec<String>,
}

impl FeatureSchema {
    /// Validates `map` against the ten canonical features.
    pub fn canonical(map: SchemaMap) -> Result<Self> {
        Self::new(canonical_features(), map)
    }

    pub fn new(features: Vec<FeatureSpec>, map: SchemaMap) -> Result<Self> {
        let mut sources = vec![None::<String>; features.len()];
        for (source, target) in &map.columns {
            let idx = features
                .iter()
                .position(|f| &f.name == target)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "{}: column `{source}` maps to unknown feature `{target}`",
                        map.dataset_name
                    ))
                })?;
            if let Some(prev) = &sources[idx] {
                return Err(Error::Schema(format!(
                    "{}: feature `{target}` mapped twice (`{prev}`, `{source}`)",
                    map.dataset_name
                )));
            }
            sources[idx] = Some(source.clone());
        }
        let sources = sources
            .into_iter()
            .zip(&features)
            .map(|(s, f)| {
                s.ok_or_else(|| {
                    Error::Schema(format!(
                        "{}: no source column mapped to feature `{}`",
                        map.dataset_name, f.name
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            features,
            map,
            sources,
        })
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn dataset_name(&self) -> &str {
        &self.map.dataset_name
    }

    pub fn label_column(&self) -> &str {
        &self.map.label_column
    }

    pub fn missing_values(&self) -> &[String] {
        &self.map.missing_values
    }

    /// Source column for each target feature, in feature order.
    pub fn source_columns(&self) -> &[String] {
        &self.sources
    }
}
