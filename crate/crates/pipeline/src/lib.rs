//! The three-level LVO prediction pipeline: per-level feature vectors,
//! image preprocessing and network summaries, the train/test protocol and
//! the Table-1-style report.
//!
//! Level 1 uses demographics and the motor/speech signs (9 columns), level
//! 2 adds structured clinical data (24 columns) and level 3 appends the 10
//! bottleneck features with the smallest training-set t-test p-values.

mod benchmark;
mod detector;
mod experiment;
mod images;
mod levels;
mod preprocess;
mod report;
mod scans;
mod select;

use thiserror::Error;

pub use benchmark::{aux_case, aux_crops, aux_scan, image_features, summarize_cohort};
pub use detector::{crop_sample, train_detector, CropSample, DetectorSpec};
pub use experiment::{
    evaluate_level, fit_level, restrict_images, run_experiment, run_experiment_on, split_rows, ExperimentConfig, ExperimentReport, FittedLevel,
    LevelFit, LevelResult, Split, EXPERIMENT_TAG, REPORT_TAG,
};
pub use images::{summarize_scan, ImageSummary};
pub use levels::{vectorize, Column, ImageFeatures, LevelSpec, IMAGE_PREFIX};
pub use preprocess::{preprocess_volume, PreparedScan, PreprocessConfig};
pub use report::{report_csv, report_svg, save_report, REPORT_HEADER};
pub use scans::ScanSpec;
pub use select::{select_slice, select_slice_by_area, select_top_k, ColumnScore, SliceChoice};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Cohort(#[from] lvo_core::cohort::CohortError),
    #[error(transparent)]
    Stats(#[from] lvo_core::cohort::stats::StatsError),
    #[error(transparent)]
    Matrix(#[from] lvo_core::MatrixError),
    #[error(transparent)]
    Gbt(#[from] lvo_core::gbt::GbtError),
    #[error(transparent)]
    Metrics(#[from] lvo_core::metrics::MetricsError),
    #[error(transparent)]
    Imaging(#[from] lvo_imaging::ImagingError),
    #[error(transparent)]
    Fcn(#[from] lvo_fcn::FcnError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
