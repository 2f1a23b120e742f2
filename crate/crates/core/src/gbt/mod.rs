//! Second-order gradient-boosted decision trees for binary labels.
//!
//! Trees are grown depth-wise by exact greedy search over midpoints of
//! consecutive distinct observed values. Rows with a missing value are tried
//! on both sides of every candidate split and the better side becomes the
//! node's learned default direction, so prediction is defined for every
//! pattern of missing inputs.

mod model;
mod params;
mod train;
mod tree;

use thiserror::Error;

pub use model::{logistic, TreeEnsemble, FORMAT_TAG, MARGIN_CLAMP};
pub use params::GbtParams;
pub use train::{split_gain, train_gbt, train_gbt_traced, GAIN_EPS, LEAF_CLAMP};
pub use tree::{DefaultDir, TreeNode};

#[derive(Debug, Error)]
pub enum GbtError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("training needs at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("{labels} labels for {rows} rows")]
    LabelLength { labels: usize, rows: usize },
    #[error("schema mismatch: model expects {expected} features, input has {got}")]
    Schema { expected: usize, got: usize },
    #[error("schema fingerprint mismatch: model {expected}, input {got}")]
    Fingerprint { expected: String, got: String },
    #[error("non-finite observed value at feature {0}")]
    NonFinite(usize),
    #[error("model document: {0}")]
    Format(String),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
