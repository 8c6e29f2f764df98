//! Experiment definition, as read from a JSON config file and/or CLI flags.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::MixRegime;

use super::synthetic::SyntheticSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv { csv: PathBuf, schema: PathBuf },
    Synthetic { synthetic: SyntheticSpec },
}

impl DatasetEntry {
    /// Parses the `name=csv_path:schema_path` flag form.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let (name, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--dataset `{s}`: expected name=csv:schema")))?;
        let (csv, schema) = rest
            .rsplit_once(':')
            .ok_or_else(|| Error::Validation(format!("--dataset `{s}`: expected name=csv:schema")))?;
        if name.is_empty() || csv.is_empty() || schema.is_empty() {
            return Err(Error::Validation(format!("--dataset `{s}`: empty component")));
        }
        Ok(Self {
            name: name.to_string(),
            source: DatasetSource::Csv {
                csv: csv.into(),
                schema: schema.into(),
            },
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let DatasetSource::Csv { csv, schema } = &mut self.source {
            for p in [csv, schema] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
    }
}

/// Stand-ins for the four heart-disease sources: same sizes and positive
/// rates, two-Gaussian features.
pub fn default_synthetic_datasets() -> Vec<DatasetEntry> {
    [
        ("framingham", 4240, 0.1519),
        ("cleveland", 282, 0.4433),
        ("long_beach", 200, 0.745),
        ("switzerland", 123, 0.955),
    ]
    .iter()
    .map(|&(name, n, p)| DatasetEntry {
        name: name.into(),
        source: DatasetSource::Synthetic {
            synthetic: SyntheticSpec::new(n, p, 1.5),
        },
    })
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    None,
    Mixup,
    Balanced,
}

impl RegimeKind {
    pub const ALL: [RegimeKind; 3] = [RegimeKind::None, RegimeKind::Mixup, RegimeKind::Balanced];

    pub fn with_alpha(self, alpha: f64) -> MixRegime {
        match self {
            RegimeKind::None => MixRegime::NoMix,
            RegimeKind::Mixup => MixRegime::MixUp { alpha },
            RegimeKind::Balanced => MixRegime::BalancedMixUp { alpha },
        }
    }
}

impl FromStr for RegimeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "nomix" => Ok(RegimeKind::None),
            "mixup" => Ok(RegimeKind::Mixup),
            "balanced" | "bal-mixup" => Ok(RegimeKind::Balanced),
            other => Err(Error::Validation(format!("unknown regime `{other}` (none|mixup|balanced)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    Local,
    Fl,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::Local => "local",
            Setting::Fl => "fl",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(Setting::Local),
            "fl" => Ok(Setting::Fl),
            other => Err(Error::Validation(format!("unknown setting `{other}` (local|fl)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningRates {
    /// No MixUp and MixUp.
    pub plain: f64,
    /// Balanced-MixUp.
    pub balanced: f64,
}

impl Default for LearningRates {
    fn default() -> Self {
        Self {
            plain: 0.004,
            balanced: 0.034,
        }
    }
}

impl LearningRates {
    pub fn for_regime(&self, regime: &MixRegime) -> f64 {
        match regime {
            MixRegime::BalancedMixUp { .. } => self.balanced,
            _ => self.plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Empty means the bundled synthetic stand-ins.
    pub datasets: Vec<DatasetEntry>,
    pub regimes: Vec<RegimeKind>,
    /// Alpha grid for the alpha sweep.
    pub alphas: Vec<f64>,
    pub mixup_alpha: f64,
    pub balanced_alpha: f64,
    pub settings: Vec<Setting>,
    /// Communication rounds; the main grid and alpha sweep use the first entry.
    pub rounds_list: Vec<usize>,
    pub gradient_budget: usize,
    pub batch_size: usize,
    pub learning_rates: LearningRates,
    pub train_ratio: f64,
    pub master_seed: u64,
    /// When non-empty, every cell runs once per seed instead of once with `master_seed`.
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    pub parallel: bool,
    pub record_wall_time: bool,
    pub checkpoints: bool,
    /// Skip datasets that fail to load instead of aborting.
    pub skip_failed_datasets: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            regimes: RegimeKind::ALL.to_vec(),
            alphas: vec![0.1, 0.2, 0.3, 0.4],
            mixup_alpha: 0.1,
            balanced_alpha: 0.3,
            settings: vec![Setting::Local, Setting::Fl],
            rounds_list: vec![5],
            gradient_budget: 100,
            batch_size: 24,
            learning_rates: LearningRates::default(),
            train_ratio: 0.8,
            master_seed: 7,
            seeds: Vec::new(),
            output: PathBuf::from("results"),
            parallel: true,
            record_wall_time: true,
            checkpoints: false,
            skip_failed_datasets: false,
        }
    }
}

impl ExperimentSpec {
    /// Reads a JSON spec; relative dataset paths resolve against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: ExperimentSpec = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut spec.datasets {
            d.resolve_paths(base);
        }
        Ok(spec)
    }

    pub fn effective_datasets(&self) -> Vec<DatasetEntry> {
        if self.datasets.is_empty() {
            default_synthetic_datasets()
        } else {
            self.datasets.clone()
        }
    }

    pub fn effective_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.master_seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn main_rounds(&self) -> usize {
        self.rounds_list.first().copied().unwrap_or(5)
    }

    pub fn local_epochs_for(&self, rounds: usize) -> usize {
        self.gradient_budget / rounds
    }

    /// Checks every constraint before any training starts.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.gradient_budget == 0 {
            return fail("gradient_budget must be at least 1".into());
        }
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.regimes.is_empty() {
            return fail("at least one regime is required".into());
        }
        if self.settings.is_empty() {
            return fail("at least one setting is required".into());
        }
        if self.rounds_list.is_empty() {
            return fail("rounds_list must not be empty".into());
        }
        for &r in &self.rounds_list {
            if r == 0 || !self.gradient_budget.is_multiple_of(r) {
                return fail(format!(
                    "{r} communication rounds do not divide the gradient budget {}",
                    self.gradient_budget
                ));
            }
        }
        for &a in self.alphas.iter().chain([&self.mixup_alpha, &self.balanced_alpha]) {
            if !(a > 0.0 && a.is_finite()) {
                return fail(format!("alpha must be > 0, got {a}"));
            }
        }
        for lr in [self.learning_rates.plain, self.learning_rates.balanced] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(format!("learning rate must be > 0, got {lr}"));
            }
        }
        if !(self.train_ratio > 0.0 && self.train_ratio < 1.0) {
            return fail(format!("train_ratio must lie in (0, 1), got {}", self.train_ratio));
        }
        let datasets = self.effective_datasets();
        let mut names = BTreeSet::new();
        for d in &datasets {
            if !names.insert(d.name.as_str()) {
                return fail(format!("dataset `{}` listed twice", d.name));
            }
            if d.name.contains([',', '"', '\n']) {
                return fail(format!("dataset name `{}` contains a reserved character", d.name));
            }
            if let DatasetSource::Synthetic { synthetic } = &d.source {
                synthetic.validate()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExperimentSpec::default().validate().unwrap();
    }

    #[test]
    fn rounds_must_divide_budget() {
        let spec = ExperimentSpec {
            rounds_list: vec![2, 3],
            ..Default::default()
        };
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("3 communication rounds"), "{err}");
        let ok = ExperimentSpec {
            rounds_list: vec![2, 5, 10],
            ..Default::default()
        };
        ok.validate().unwrap();
        assert_eq!(ok.local_epochs_for(2), 50);
        assert_eq!(ok.local_epochs_for(10), 10);
    }

    #[test]
    fn alpha_must_be_positive() {
        let spec = ExperimentSpec {
            alphas: vec![0.1, 0.0],
            ..Default::default()
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn dataset_flag_parsing() {
        let d = DatasetEntry::parse_flag("cleveland=data/c.csv:data/schemas/c.json").unwrap();
        assert_eq!(d.name, "cleveland");
        match d.source {
            DatasetSource::Csv { csv, schema } => {
                assert_eq!(csv, PathBuf::from("data/c.csv"));
                assert_eq!(schema, PathBuf::from("data/schemas/c.json"));
            }
            _ => panic!(),
        }
        assert!(DatasetEntry::parse_flag("nocolon").is_err());
        assert!(DatasetEntry::parse_flag("x=a.csv").is_err());
    }

    #[test]
    fn json_round_trip_with_both_source_kinds() {
        let spec = ExperimentSpec {
            datasets: vec![
                DatasetEntry::parse_flag("a=a.csv:a.json").unwrap(),
                DatasetEntry {
                    name: "s".into(),
                    source: DatasetSource::Synthetic {
                        synthetic: SyntheticSpec::new(200, 0.1, 1.0),
                    },
                },
            ],
            ..Default::default()
        };
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn learning_rate_by_regime() {
        let lr = LearningRates::default();
        assert_eq!(lr.for_regime(&MixRegime::BalancedMixUp { alpha: 0.3 }), 0.034);
        assert_eq!(lr.for_regime(&MixRegime::MixUp { alpha: 0.1 }), 0.004);
        assert_eq!(lr.for_regime(&MixRegime::NoMix), 0.004);
    }
}
