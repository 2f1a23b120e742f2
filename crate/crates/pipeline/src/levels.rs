use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use lvo_core::cohort::{FieldKind, Manifest, PatientRecord};
use lvo_core::{ColumnKind, FeatureMatrix};

use crate::PipelineError;

/// Prefix of the image-feature columns; the suffix is the bottleneck index.
pub const IMAGE_PREFIX: &str = "img_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered model inputs of one level. Level 3 is level 2 plus image columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub level: u8,
    pub columns: Vec<Column>,
}

impl LevelSpec {
    /// Manifest columns of levels `1..=level` (capped at 2), in manifest order.
    pub fn clinical(manifest: &Manifest, level: u8) -> Result<Self, PipelineError> {
        if !(1..=3).contains(&level) {
            return Err(PipelineError::Config(format!("level {level} is not 1, 2 or 3")));
        }
        let columns = manifest
            .features
            .iter()
            .filter(|f| f.level >= 1 && f.level <= level.min(2))
            .map(|f| Column {
                name: f.name.clone(),
                kind: if f.kind == FieldKind::Binary { ColumnKind::Binary } else { ColumnKind::Continuous },
            })
            .collect();
        Ok(Self { level, columns })
    }

    /// Level 3: the level-2 columns followed by the given bottleneck indices.
    pub fn with_image(manifest: &Manifest, image_indices: &[usize]) -> Result<Self, PipelineError> {
        let mut spec = Self::clinical(manifest, 3)?;
        spec.columns.extend(
            image_indices.iter().map(|i| Column { name: format!("{IMAGE_PREFIX}{i}"), kind: ColumnKind::Continuous }),
        );
        Ok(spec)
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }
}

/// Bottleneck vectors keyed by record id; `None` marks a record without a
/// usable scan.
pub type ImageFeatures = BTreeMap<String, Option<Vec<f64>>>;

/// One row per record. Image columns read `img_<i>` from the record's
/// bottleneck vector; records absent from `images`, or mapped to `None`,
/// get those columns masked missing.
pub fn vectorize(
    records: &[PatientRecord],
    spec: &LevelSpec,
    images: Option<&ImageFeatures>,
) -> Result<FeatureMatrix, PipelineError> {
    let mut image_cols = Vec::new();
    for (j, c) in spec.columns.iter().enumerate() {
        if let Some(idx) = c.name.strip_prefix(IMAGE_PREFIX) {
            let idx: usize = idx.parse().map_err(|_| PipelineError::UnknownColumn(c.name.clone()))?;
            image_cols.push((j, idx));
        } else if records.first().is_some_and(|r| r.feature(&c.name).is_err()) {
            return Err(PipelineError::UnknownColumn(c.name.clone()));
        }
    }
    if !image_cols.is_empty() && images.is_none() {
        return Err(PipelineError::Config("image columns requested without image features".into()));
    }
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let vec = images.and_then(|m| m.get(&r.id)).and_then(Option::as_ref);
        let mut row = Vec::with_capacity(spec.columns.len());
        let mut img = image_cols.iter().peekable();
        for (j, c) in spec.columns.iter().enumerate() {
            if img.peek().is_some_and(|(col, _)| *col == j) {
                let (_, idx) = img.next().expect("peeked");
                let v = match vec {
                    Some(v) => Some(*v.get(*idx).ok_or_else(|| PipelineError::UnknownColumn(c.name.clone()))?),
                    None => None,
                };
                row.push(v);
            } else {
                row.push(r.feature(&c.name).map_err(|_| PipelineError::UnknownColumn(c.name.clone()))?);
            }
        }
        rows.push(row);
    }
    let kinds = spec.columns.iter().map(|c| c.kind).collect();
    Ok(FeatureMatrix::from_rows(&rows, spec.names(), kinds)?)
}
