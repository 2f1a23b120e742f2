//! The versioned feature manifest: the single source of truth for which
//! columns exist, their kind, level and valid range.

use super::CohortError;

pub const MANIFEST_V1: &str = include_str!("../../data/features-v1.txt");
const MAGIC: &str = "# lvo-feature-manifest v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Binary,
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDef {
    pub name: String,
    pub kind: FieldKind,
    /// 1 or 2 for model inputs, 0 for descriptive-only columns.
    pub level: u8,
    pub min: f64,
    pub max: f64,
}

impl FeatureDef {
    pub fn in_range(&self, v: f64) -> bool {
        let integral = match self.kind {
            FieldKind::Continuous => true,
            FieldKind::Binary | FieldKind::Integer => v.fract() == 0.0,
        };
        integral && v >= self.min && v <= self.max
    }

    pub fn is_continuous(&self) -> bool {
        self.kind != FieldKind::Binary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub features: Vec<FeatureDef>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, CohortError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(MAGIC) {
            return Err(CohortError::Manifest(format!("missing header {MAGIC:?}")));
        }
        let mut features: Vec<FeatureDef> = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| CohortError::Manifest(format!("line {}: {what}", i + 2));
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let [name, kind, level, min, max] = parts[..] else {
                return Err(bad("expected 5 fields"));
            };
            let kind = match kind {
                "binary" => FieldKind::Binary,
                "continuous" => FieldKind::Continuous,
                "integer" => FieldKind::Integer,
                other => return Err(bad(&format!("unknown kind {other:?}"))),
            };
            let level: u8 = level.parse().map_err(|_| bad("bad level"))?;
            if level > 2 {
                return Err(bad("level must be 0, 1 or 2"));
            }
            let min: f64 = min.parse().map_err(|_| bad("bad min"))?;
            let max: f64 = max.parse().map_err(|_| bad("bad max"))?;
            if features.iter().any(|f| f.name == name) {
                return Err(bad(&format!("duplicate column {name:?}")));
            }
            features.push(FeatureDef { name: name.to_string(), kind, level, min, max });
        }
        Ok(Self { features })
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDef> {
        self.features.iter().find(|f| f.name == name)
    }

    /// Model-input columns up to and including `level`, in manifest order.
    pub fn level_columns(&self, level: u8) -> Vec<&FeatureDef> {
        self.features.iter().filter(|f| f.level >= 1 && f.level <= level).collect()
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Self::parse(MANIFEST_V1).expect("bundled manifest is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_has_nine_basic_and_twenty_four_clinical_columns() {
        let m = Manifest::default();
        assert_eq!(m.level_columns(1).len(), 9);
        assert_eq!(m.level_columns(2).len(), 24);
        assert_eq!(m.features.len(), 26);
    }

    #[test]
    fn rejects_unknown_kind_and_missing_header() {
        assert!(Manifest::parse("age,continuous,1,18,120").is_err());
        let bad = format!("{MAGIC}\nage,fuzzy,1,18,120\n");
        assert!(Manifest::parse(&bad).is_err());
    }

    #[test]
    fn integer_columns_reject_fractions() {
        let m = Manifest::default();
        let gcs = m.get("gcs_total").unwrap();
        assert!(gcs.in_range(15.0));
        assert!(!gcs.in_range(14.5));
        assert!(!gcs.in_range(2.0));
    }
}
