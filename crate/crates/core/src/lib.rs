//! Tabular side of the LVO prediction pipeline.
//!
//! - [`cohort`]: patient records, the feature manifest, CSV I/O, synthetic
//!   cohort generation and the descriptive two-group tests.
//! - [`gbt`]: second-order gradient-boosted trees with learned default
//!   directions for missing values.
//! - [`metrics`]: ROC/AUC, confusion metrics, Youden index and the
//!   cross-validated cutoff search.

pub mod cohort;
pub mod gbt;
pub mod hexfloat;
pub mod matrix;
pub mod metrics;
pub mod rng;

pub use matrix::{ColumnKind, FeatureMatrix, MatrixError};
