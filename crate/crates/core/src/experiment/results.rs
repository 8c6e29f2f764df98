//! Result rows and their CSV / Markdown renderings.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::spec::Setting;

pub const CSV_HEADER: [&str; 11] = [
    "dataset",
    "regime",
    "alpha",
    "setting",
    "rounds",
    "local_epochs",
    "seed",
    "loss",
    "accuracy",
    "f_score",
    "wall_time_s",
];

/// One grid cell evaluated on one dataset. `rounds` is 0 for local training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub dataset: String,
    pub regime: String,
    pub alpha: Option<f64>,
    pub setting: Setting,
    pub rounds: usize,
    pub local_epochs: usize,
    pub seed: u64,
    pub loss: f64,
    pub accuracy: f64,
    pub f_score: f64,
    pub wall_time_s: f64,
}

impl RunRow {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.dataset
            .cmp(&other.dataset)
            .then_with(|| self.regime.cmp(&other.regime))
            .then_with(|| {
                self.alpha
                    .unwrap_or(0.0)
                    .total_cmp(&other.alpha.unwrap_or(0.0))
            })
            .then_with(|| self.setting.as_str().cmp(other.setting.as_str()))
            .then_with(|| self.rounds.cmp(&other.rounds))
            .then_with(|| self.seed.cmp(&other.seed))
    }

    /// Rounds the float columns to the four decimals written to disk.
    pub fn rounded(&self) -> Self {
        Self {
            alpha: self.alpha.map(round4),
            loss: round4(self.loss),
            accuracy: round4(self.accuracy),
            f_score: round4(self.f_score),
            wall_time_s: round4(self.wall_time_s),
            ..self.clone()
        }
    }
}

fn round4(v: f64) -> f64 {
    format!("{v:.4}").parse().unwrap_or(v)
}

/// Rows in canonical (dataset, regime, alpha, setting, rounds, seed) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunResult {
    pub rows: Vec<RunRow>,
}

impl RunResult {
    pub fn new(mut rows: Vec<RunRow>) -> Self {
        rows.sort_by(RunRow::sort_key_cmp);
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            let alpha = r.alpha.map(|a| format!("{a:.4}")).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4}",
                r.dataset,
                r.regime,
                alpha,
                r.setting,
                r.rounds,
                r.local_epochs,
                r.seed,
                r.loss,
                r.accuracy,
                r.f_score,
                r.wall_time_s
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Schema(format!("results.csv: {msg}"));
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if headers.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(bad(format!("unexpected header {headers:?}")));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let f = |i: usize| -> Result<f64> {
                rec[i].parse().map_err(|_| bad(format!("bad number `{}`", &rec[i])))
            };
            let u = |i: usize| -> Result<u64> {
                rec[i].parse().map_err(|_| bad(format!("bad integer `{}`", &rec[i])))
            };
            rows.push(RunRow {
                dataset: rec[0].to_string(),
                regime: rec[1].to_string(),
                alpha: if rec[2].is_empty() { None } else { Some(f(2)?) },
                setting: rec[3].parse()?,
                rounds: u(4)? as usize,
                local_epochs: u(5)? as usize,
                seed: u(6)?,
                loss: f(7)?,
                accuracy: f(8)?,
                f_score: f(9)?,
                wall_time_s: f(10)?,
            });
        }
        Ok(Self { rows })
    }

    /// Per-dataset table with one column group per (setting, rounds).
    pub fn to_markdown(&self) -> String {
        let mut groups: Vec<(Setting, usize)> =
            self.rows.iter().map(|r| (r.setting, r.rounds)).collect();
        groups.sort();
        groups.dedup();
        let label = |(s, r): (Setting, usize)| match s {
            Setting::Local => "Local".to_string(),
            Setting::Fl => format!("FL, {r} rounds"),
        };

        let mut out = String::from("| Dataset | Model | Seed |");
        let mut rule = String::from("|---|---|---|");
        for &g in &groups {
            let l = label(g);
            let _ = write!(out, " {l} Loss | {l} Acc. | {l} F-Score |");
            rule.push_str("---:|---:|---:|");
        }
        out.push('\n');
        out.push_str(&rule);
        out.push('\n');

        type Key = (String, String, u64, u64);
        let mut cells: BTreeMap<Key, BTreeMap<(Setting, usize), &RunRow>> = BTreeMap::new();
        for r in &self.rows {
            let key = (
                r.dataset.clone(),
                r.regime.clone(),
                r.alpha.unwrap_or(0.0).to_bits(),
                r.seed,
            );
            cells.entry(key).or_default().insert((r.setting, r.rounds), r);
        }
        for ((dataset, regime, alpha_bits, seed), by_group) in &cells {
            let model = match regime.as_str() {
                "none" => "No MixUp".to_string(),
                "mixup" => format!("MixUp (α={})", f64::from_bits(*alpha_bits)),
                "balanced" => format!("Bal-MixUp (α={})", f64::from_bits(*alpha_bits)),
                other => other.to_string(),
            };
            let _ = write!(out, "| {dataset} | {model} | {seed} |");
            for g in &groups {
                match by_group.get(g) {
                    Some(r) => {
                        let _ = write!(out, " {:.3} | {:.2} | {:.2} |", r.loss, r.accuracy, r.f_score);
                    }
                    None => out.push_str(" – | – | – |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Writes `results.csv` and `results.md` into `dir`, returning their paths.
pub fn emit_results(table: &RunResult, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    if table.is_empty() {
        return Err(Error::Validation("refusing to write an empty result table".into()));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join("results.csv");
    let md_path = dir.join("results.md");
    std::fs::write(&csv_path, table.to_csv()).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&md_path, table.to_markdown()).map_err(|e| Error::io(&md_path, e))?;
    Ok((csv_path, md_path))
}

pub fn parse_results(path: impl AsRef<Path>) -> Result<RunResult> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunResult::from_csv(&text)
}
