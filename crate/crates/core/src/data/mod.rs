//! Dataset ingestion: CSV loading against a shared schema, stratified
//! splitting, and train-fitted imputation/normalization.

mod dataset;
mod load;
mod preprocess;
mod schema;
mod split;

pub use dataset::{RawTable, TabularDataset};
pub use load::{load_csv, read_csv};
pub use preprocess::{apply_preprocessor, fit_preprocessor, Preprocessor};
pub use schema::{canonical_features, FeatureKind, FeatureSchema, FeatureSpec, SchemaMap, CANONICAL_FEATURES};
pub use split::{split, train_allocation, RawSplit, DEFAULT_TRAIN_RATIO};

use crate::error::Result;
use crate::numeric::Rng;

/// Preprocessed train/test pair for one data holder.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: TabularDataset,
    pub test: TabularDataset,
    pub ratio: f64,
    /// Key words of the stream that drew the partition.
    pub seed: [u64; 4],
    pub preprocessor: Preprocessor,
}

/// Splits `raw`, fits statistics on the training part and applies them to both.
pub fn prepare(raw: &RawTable, ratio: f64, rng: &mut Rng) -> Result<Split> {
    let seed = rng.seed_words();
    let parts = split(raw, ratio, rng)?;
    let preprocessor = Preprocessor::fit(&parts.train)?;
    Ok(Split {
        train: preprocessor.apply(&parts.train)?,
        test: preprocessor.apply(&parts.test)?,
        ratio,
        seed,
        preprocessor,
    })
}
