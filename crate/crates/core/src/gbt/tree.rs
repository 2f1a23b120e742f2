use serde::{Deserialize, Serialize};

use crate::hexfloat::serde_f64 as hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DefaultDir {
    Left,
    Right,
}

/// Routing: `value < threshold` goes left, `value ≥ threshold` right,
/// missing follows `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode {
    Split {
        feature: usize,
        #[serde(with = "hex")]
        threshold: f64,
        default: DefaultDir,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        #[serde(with = "hex")]
        weight: f64,
    },
}

impl TreeNode {
    /// Leaf reached by `row`, as `(leaf weight, leaf index in DFS order)`.
    pub fn route(&self, row: &[Option<f64>]) -> (f64, usize) {
        let mut node = self;
        let mut idx = 0;
        loop {
            match node {
                TreeNode::Leaf { weight } => return (*weight, idx),
                TreeNode::Split { feature, threshold, default, left, right } => {
                    let go_left = match row[*feature] {
                        Some(v) => v < *threshold,
                        None => *default == DefaultDir::Left,
                    };
                    if go_left {
                        node = left;
                        idx = 2 * idx + 1;
                    } else {
                        node = right;
                        idx = 2 * idx + 2;
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, left, right, .. } => {
                Some((*feature).max(left.max_feature().unwrap_or(0)).max(right.max_feature().unwrap_or(0)))
            }
        }
    }
}
