use std::io::ErrorKind;

use lvo_core::cohort::CohortError;
use lvo_core::gbt::GbtError;
use lvo_core::metrics::MetricsError;
use lvo_fcn::FcnError;
use lvo_imaging::ImagingError;
use lvo_pipeline::PipelineError;

pub const USAGE: i32 = 1;
pub const FORMAT: i32 = 2;
pub const VALIDATION: i32 = 3;
pub const INTERNAL: i32 = 4;

/// A file whose tag, magic or structure is not what the stage expects.
#[derive(Debug)]
pub struct FormatError(pub String);

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for FormatError {}

/// Inputs that parse but cannot be used (bad values, missing files).
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

fn io(e: &std::io::Error) -> i32 {
    match e.kind() {
        ErrorKind::NotFound | ErrorKind::PermissionDenied | ErrorKind::AlreadyExists | ErrorKind::NotADirectory => {
            VALIDATION
        }
        ErrorKind::InvalidData | ErrorKind::UnexpectedEof => FORMAT,
        _ => INTERNAL,
    }
}

fn imaging(e: &ImagingError) -> i32 {
    match e {
        ImagingError::Format(_) => FORMAT,
        ImagingError::Io(e) => io(e),
        _ => VALIDATION,
    }
}

fn fcn(e: &FcnError) -> i32 {
    match e {
        FcnError::Format(_) | FcnError::Json(_) => FORMAT,
        FcnError::Io(e) => io(e),
        _ => VALIDATION,
    }
}

fn gbt(e: &GbtError) -> i32 {
    match e {
        GbtError::Format(_) | GbtError::Json(_) => FORMAT,
        _ => VALIDATION,
    }
}

fn cohort(e: &CohortError) -> i32 {
    match e {
        CohortError::Header { .. } | CohortError::Parse { .. } | CohortError::Csv(_) | CohortError::Manifest(_) => FORMAT,
        CohortError::Io(e) => io(e),
        _ => VALIDATION,
    }
}

fn metrics(e: &MetricsError) -> i32 {
    match e {
        MetricsError::Gbt(e) => gbt(e),
        MetricsError::Io(e) => io(e),
        _ => VALIDATION,
    }
}

fn pipeline(e: &PipelineError) -> i32 {
    match e {
        PipelineError::Format(_) | PipelineError::Json(_) => FORMAT,
        PipelineError::Cohort(e) => cohort(e),
        PipelineError::Gbt(e) => gbt(e),
        PipelineError::Metrics(e) => metrics(e),
        PipelineError::Imaging(e) => imaging(e),
        PipelineError::Fcn(e) => fcn(e),
        PipelineError::Io(e) => io(e),
        _ => VALIDATION,
    }
}

/// Exit code of a failed command: the first error in the chain with a known
/// type decides.
pub fn classify(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<FormatError>() {
            return FORMAT;
        }
        if cause.is::<ValidationError>() {
            return VALIDATION;
        }
        if let Some(e) = cause.downcast_ref::<PipelineError>() {
            return pipeline(e);
        }
        if let Some(e) = cause.downcast_ref::<ImagingError>() {
            return imaging(e);
        }
        if let Some(e) = cause.downcast_ref::<FcnError>() {
            return fcn(e);
        }
        if let Some(e) = cause.downcast_ref::<GbtError>() {
            return gbt(e);
        }
        if let Some(e) = cause.downcast_ref::<CohortError>() {
            return cohort(e);
        }
        if let Some(e) = cause.downcast_ref::<MetricsError>() {
            return metrics(e);
        }
        if cause.is::<serde_json::Error>() {
            return FORMAT;
        }
        if let Some(e) = cause.downcast_ref::<std::io::Error>() {
            return io(e);
        }
    }
    INTERNAL
}
