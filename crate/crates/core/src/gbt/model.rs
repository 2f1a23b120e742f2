use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::GbtParams;
use super::tree::TreeNode;
use super::GbtError;
use crate::matrix::{ColumnKind, FeatureMatrix};

pub const FORMAT_TAG: &str = "gbt-v1";
/// Margins are clamped to `±MARGIN_CLAMP` before the logistic link.
pub const MARGIN_CLAMP: f64 = 30.0;

pub fn logistic(margin: f64) -> f64 {
    let m = margin.clamp(-MARGIN_CLAMP, MARGIN_CLAMP);
    1.0 / (1.0 + (-m).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub fingerprint: String,
    pub columns: Vec<String>,
}

fn fingerprint(names: &[String], kinds: &[ColumnKind]) -> String {
    let mut h = Sha256::new();
    for (n, k) in names.iter().zip(kinds) {
        h.update(n.as_bytes());
        h.update(match k {
            ColumnKind::Binary => b":binary\n".as_slice(),
            ColumnKind::Continuous => b":continuous\n".as_slice(),
        });
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    format: String,
    params: GbtParams,
    schema: Schema,
    trees: Vec<TreeNode>,
}

impl TreeEnsemble {
    pub(crate) fn new(trees: Vec<TreeNode>, params: GbtParams, x: &FeatureMatrix) -> Self {
        let schema = Schema {
            fingerprint: fingerprint(x.col_names(), x.col_kinds()),
            columns: x.col_names().to_vec(),
        };
        Self { format: FORMAT_TAG.to_string(), params, schema, trees }
    }

    pub fn params(&self) -> &GbtParams {
        &self.params
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn n_features(&self) -> usize {
        self.schema.columns.len()
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    /// `base_margin + η · Σ tree outputs`; defined for every missing pattern.
    pub fn predict_margin(&self, row: &[Option<f64>]) -> Result<f64, GbtError> {
        if row.len() != self.n_features() {
            return Err(GbtError::Schema { expected: self.n_features(), got: row.len() });
        }
        let sum: f64 = self.trees.iter().map(|t| t.route(row).0).sum();
        Ok(self.params.base_margin + self.params.learning_rate * sum)
    }

    pub fn predict_proba(&self, row: &[Option<f64>]) -> Result<f64, GbtError> {
        self.predict_margin(row).map(logistic)
    }

    /// Probabilities for every row of `x`, after checking its schema.
    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<Vec<f64>, GbtError> {
        let fp = fingerprint(x.col_names(), x.col_kinds());
        if fp != self.schema.fingerprint {
            return Err(GbtError::Fingerprint { expected: self.schema.fingerprint.clone(), got: fp });
        }
        (0..x.n_rows()).map(|r| self.predict_proba(&x.row(r))).collect()
    }

    /// Leaf index reached in each tree, for partition comparisons.
    pub fn leaf_assignments(&self, row: &[Option<f64>]) -> Vec<usize> {
        self.trees.iter().map(|t| t.route(row).1).collect()
    }

    pub fn to_json(&self) -> Result<String, GbtError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, GbtError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(FORMAT_TAG) => {}
            other => {
                return Err(GbtError::Format(format!("expected format {FORMAT_TAG:?}, found {other:?}")))
            }
        }
        let model: Self = serde_json::from_value(value)?;
        model.params.validate()?;
        for t in &model.trees {
            if t.max_feature().is_some_and(|f| f >= model.n_features()) {
                return Err(GbtError::Format("split feature index out of range".into()));
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GbtError> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| GbtError::Format(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GbtError> {
        let text = std::fs::read_to_string(path).map_err(|e| GbtError::Format(e.to_string()))?;
        Self::from_json(&text)
    }
}
