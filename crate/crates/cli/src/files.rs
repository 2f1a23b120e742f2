//! Intermediate files passed between stages. JSON documents carry a
//! `format` tag; the feature file starts with an 8-byte magic.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lvo_core::cohort::WeakSide;
use lvo_imaging::{RigidTransform2D, RoiBox};
use lvo_pipeline::{ExperimentConfig, LevelFit, PreprocessConfig, ScanSpec, Split};

use crate::exit::FormatError;

pub const SCANS_TAG: &str = "scans-v1";
pub const PREP_TAG: &str = "prep-v1";
pub const FIT_TAG: &str = "fit-v1";
pub const SUMMARY_TAG: &str = "summaries-v1";
pub const FEATURES_MAGIC: &[u8; 8] = b"LVOFEAT1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanEntry {
    pub scan_id: String,
    pub volume: String,
    pub mask: String,
    pub weak_side: WeakSide,
    pub dot: bool,
}

/// `scans.json`: the synthesized volumes and their ground-truth masks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanManifest {
    pub format: String,
    pub seed: u64,
    pub spec: ScanSpec,
    pub scans: Vec<ScanEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepEntry {
    pub scan_id: String,
    /// Windowed, registered, skull-stripped volume.
    pub file: String,
    pub weak_side: WeakSide,
    pub transform: RigidTransform2D,
    pub registration_degenerate: bool,
    pub boxes: (RoiBox, RoiBox),
}

/// `prep.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepManifest {
    pub format: String,
    pub config: PreprocessConfig,
    pub scans: Vec<PrepEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitLevelEntry {
    pub fit: LevelFit,
    /// gbt-v1 model file, relative to the fit directory.
    pub model: String,
}

/// `fit.json`: what `train` learned.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDoc {
    pub format: String,
    pub config: ExperimentConfig,
    pub split: Split,
    pub levels: Vec<FitLevelEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub scan_id: String,
    pub slice: usize,
    pub fallback: bool,
    pub areas: Vec<usize>,
    pub components: Vec<usize>,
    pub dot_flag: bool,
}

/// Human-readable side file of `extract`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub format: String,
    pub area_threshold: f64,
    pub scans: Vec<SummaryEntry>,
}

pub fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)? + "\n";
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Reads a tagged JSON document, naming the expected tag on mismatch.
pub fn read_json<T: DeserializeOwned>(path: &Path, tag: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| FormatError(format!("{}: not JSON ({e}); expected a {tag:?} document", path.display())))?;
    let found = value.get("format").and_then(|f| f.as_str()).unwrap_or("<none>");
    if found != tag {
        return Err(FormatError(format!("{}: expected format {tag:?}, found {found:?}", path.display())).into());
    }
    serde_json::from_value(value).map_err(|e| FormatError(format!("{}: malformed {tag:?} document: {e}", path.display())).into())
}

/// Feature file: magic, entry count, then per entry the id, a presence
/// byte and, when present, the vector length and its little-endian values.
pub fn features_bytes(features: &BTreeMap<String, Option<Vec<f64>>>) -> Vec<u8> {
    let mut out = FEATURES_MAGIC.to_vec();
    out.extend_from_slice(&(features.len() as u64).to_le_bytes());
    for (id, v) in features {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        match v {
            None => out.push(0),
            Some(v) => {
                out.push(1);
                out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| FormatError("feature file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn features_from_bytes(bytes: &[u8]) -> Result<BTreeMap<String, Option<Vec<f64>>>, FormatError> {
    if bytes.len() < 8 || &bytes[..8] != FEATURES_MAGIC {
        return Err(FormatError(format!("bad magic; expected {:?}", String::from_utf8_lossy(FEATURES_MAGIC))));
    }
    let mut r = Reader { bytes, pos: 8 };
    let n = r.u64()?;
    let mut out = BTreeMap::new();
    for _ in 0..n {
        let len = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")) as usize;
        let id = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| FormatError("id is not UTF-8".into()))?;
        let v = match r.take(1)?[0] {
            0 => None,
            1 => {
                let len = usize::try_from(r.u64()?).map_err(|_| FormatError("vector too long".into()))?;
                let raw = r.take(len.checked_mul(8).ok_or_else(|| FormatError("vector too long".into()))?)?;
                Some(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
            }
            b => return Err(FormatError(format!("presence byte {b}"))),
        };
        out.insert(id, v);
    }
    if r.pos != bytes.len() {
        return Err(FormatError("trailing bytes after the last entry".into()));
    }
    Ok(out)
}

pub fn read_features(path: &Path) -> Result<BTreeMap<String, Option<Vec<f64>>>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(features_from_bytes(&bytes).with_context(|| format!("{}", path.display()))?)
}
