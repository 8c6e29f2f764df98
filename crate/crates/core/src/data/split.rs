//! Stratified train/test partition.

use crate::error::{Error, Result};
use crate::numeric::Rng;

use super::dataset::RawTable;

pub const DEFAULT_TRAIN_RATIO: f64 = 0.8;

/// Index sets of a raw split, plus the subsets themselves.
#[derive(Debug, Clone)]
pub struct RawSplit {
    pub train: RawTable,
    pub test: RawTable,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub ratio: f64,
}

/// Number of training rows per class.
///
/// The training set receives `⌈ratio·N⌉` rows overall. Each class first gets
/// `⌊ratio·n_c⌋`; the remainder goes one row at a time to the classes with the
/// largest fractional part. A class with at least two samples always keeps one
/// for testing; a class with fewer goes entirely to training.
pub fn train_allocation(class_counts: &[usize], ratio: f64) -> Vec<usize> {
    const EPS: f64 = 1e-9;
    let total: usize = class_counts.iter().sum();
    let target = ((ratio * total as f64) - EPS).ceil().max(0.0) as usize;
    let mut alloc: Vec<usize> = class_counts
        .iter()
        .map(|&n| {
            if n < 2 {
                n
            } else {
                (((ratio * n as f64) + EPS).floor() as usize).min(n - 1)
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..class_counts.len()).filter(|&c| class_counts[c] >= 2).collect();
    let frac = |c: usize| {
        let exact = ratio * class_counts[c] as f64;
        exact - exact.floor()
    };
    order.sort_by(|&a, &b| frac(b).total_cmp(&frac(a)).then(a.cmp(&b)));
    let mut assigned: usize = alloc.iter().sum();
    while assigned < target {
        let mut progressed = false;
        for &c in &order {
            if assigned >= target {
                break;
            }
            if alloc[c] < class_counts[c] - 1 {
                alloc[c] += 1;
                assigned += 1;
                progressed = true;
            }
        }
        if !progressed {
            break;
        }
    }
    alloc
}

/// Stratified random split: each class is shuffled independently and its first
/// [`train_allocation`] rows go to training.
pub fn split(raw: &RawTable, ratio: f64, rng: &mut Rng) -> Result<RawSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    if raw.len() < 5 {
        return Err(Error::data(&raw.name, format!("need at least 5 rows to split, got {}", raw.len())));
    }
    let num_classes = raw.labels.iter().map(|&y| y as usize + 1).max().unwrap_or(0).max(2);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &y) in raw.labels.iter().enumerate() {
        by_class[y as usize].push(i);
    }
    if let Some(c) = by_class.iter().position(Vec::is_empty) {
        return Err(Error::data(&raw.name, format!("class {c} has no samples; cannot split")));
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            log::warn!("{}: class {c} has {n} sample(s); placing it entirely in train", raw.name);
        }
    }
    let alloc = train_allocation(&counts, ratio);

    let mut train_indices = Vec::new();
    let mut test_indices = Vec::new();
    for (members, &n_train) in by_class.iter_mut().zip(&alloc) {
        rng.shuffle(members);
        train_indices.extend_from_slice(&members[..n_train]);
        test_indices.extend_from_slice(&members[n_train..]);
    }
    rng.shuffle(&mut train_indices);
    rng.shuffle(&mut test_indices);

    Ok(RawSplit {
        train: raw.select(&train_indices),
        test: raw.select(&test_indices),
        train_indices,
        test_indices,
        ratio,
    })
}
