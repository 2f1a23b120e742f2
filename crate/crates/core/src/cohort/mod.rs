//! Patient cohort: records, manifest, CSV I/O, synthetic generation and
//! the descriptive two-group tests.

mod csv_io;
pub mod manifest;
mod record;
pub mod stats;
pub mod synth;

use thiserror::Error;

pub use csv_io::{cohort_header, load_cohort_csv, read_cohort_csv, write_cohort_csv, write_cohort_csv_file};
pub use manifest::{FeatureDef, FieldKind, Manifest};
pub use record::{PatientRecord, RuleViolation, Sex, WeakSide};
pub use stats::{chi_square_2x2, cohort_stats, two_sample_t, CohortStats, FeatureStats, TTest, TVariant};
pub use synth::{synth_cohort, CohortSpec};

#[derive(Debug, Error)]
pub enum CohortError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}, column {column:?}: cannot parse {value:?}: {reason}")]
    Parse { row: usize, column: String, value: String, reason: String },
    #[error("row {row} (id {id:?}): validation failed: {rule}")]
    Validation { row: usize, id: String, rule: String },
    #[error("duplicate id {id:?} at row {row}")]
    DuplicateId { row: usize, id: String },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("invalid cohort spec: {0}")]
    Spec(String),
}
