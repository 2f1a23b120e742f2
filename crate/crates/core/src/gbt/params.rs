use serde::{Deserialize, Serialize};

use super::GbtError;
use crate::hexfloat::serde_f64 as hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub num_rounds: usize,
    /// Shrinkage η applied to every tree's output.
    #[serde(with = "hex")]
    pub learning_rate: f64,
    pub max_depth: usize,
    /// L2 penalty λ on leaf weights.
    #[serde(with = "hex")]
    pub lambda: f64,
    /// Minimum gain γ for a split to be kept.
    #[serde(with = "hex")]
    pub gamma: f64,
    #[serde(with = "hex")]
    pub min_child_weight: f64,
    /// Initial margin; 0 corresponds to probability 0.5.
    #[serde(with = "hex")]
    pub base_margin: f64,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            num_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            base_margin: 0.0,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<(), GbtError> {
        let bad = |m: &str| Err(GbtError::Params(m.to_string()));
        if self.max_depth < 1 {
            return bad("max_depth must be ≥ 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be ≥ 0");
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad("gamma must be ≥ 0");
        }
        if !(self.min_child_weight >= 0.0 && self.min_child_weight.is_finite()) {
            return bad("min_child_weight must be ≥ 0");
        }
        if !self.base_margin.is_finite() {
            return bad("base_margin must be finite");
        }
        Ok(())
    }
}
