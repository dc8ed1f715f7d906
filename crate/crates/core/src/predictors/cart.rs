//! Greedy CART regression tree on squared-error impurity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 4,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        leaf_id: usize,
    },
}

/// An axis-aligned regression tree; leaf values are empirical means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    dim: usize,
    n_leaves: usize,
}

impl RegressionTree {
    /// Fits a tree by greedy squared-error splitting. Splits are scanned in
    /// (feature, threshold) order so ties are deterministic; a node becomes
    /// a leaf when no split leaves `min_leaf` rows on each side.
    pub fn fit(features: &[&[f64]], targets: &[f64], params: &TreeParams) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit a tree on no rows".into()));
        }
        let dim = features[0].len();
        let mut tree = Self {
            nodes: Vec::new(),
            dim,
            n_leaves: 0,
        };
        let rows: Vec<usize> = (0..features.len()).collect();
        tree.build(features, targets, &rows, params, 0);
        Ok(tree)
    }

    fn build(
        &mut self,
        features: &[&[f64]],
        targets: &[f64],
        rows: &[usize],
        params: &TreeParams,
        depth: usize,
    ) -> usize {
        let mean = rows.iter().map(|&i| targets[i]).sum::<f64>() / rows.len() as f64;
        let make_leaf = |tree: &mut Self| {
            let id = tree.n_leaves;
            tree.n_leaves += 1;
            tree.nodes.push(TreeNode::Leaf {
                value: mean,
                leaf_id: id,
            });
            tree.nodes.len() - 1
        };
        if depth >= params.max_depth || rows.len() < 2 * params.min_leaf {
            return make_leaf(self);
        }
        let Some((feature, threshold)) = best_split(features, targets, rows, params.min_leaf)
        else {
            return make_leaf(self);
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| features[i][feature] < threshold);
        let slot = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: mean,
            leaf_id: usize::MAX,
        });
        let left = self.build(features, targets, &left_rows, params, depth + 1);
        let right = self.build(features, targets, &right_rows, params, depth + 1);
        self.nodes[slot] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { value, .. } => return Ok(*value),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Index of the leaf reached by `x`, in `0..n_leaves`.
    pub fn leaf_index(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { leaf_id, .. } => return Ok(*leaf_id),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Best (feature, threshold) by squared-error reduction; `None` when no
/// split keeps `min_leaf` rows per side. Thresholds are midpoints between
/// distinct adjacent sorted values.
#[allow(clippy::needless_range_loop)] // `feature` indexes the inner row axis
fn best_split(
    features: &[&[f64]],
    targets: &[f64],
    rows: &[usize],
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let dim = features[rows[0]].len();
    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| targets[i]).sum();
    // A split must strictly improve on the no-split score.
    let base = total * total / n as f64;
    let mut best: Option<(f64, usize, f64)> = None;

    for feature in 0..dim {
        let mut order: Vec<usize> = rows.to_vec();
        order.sort_by(|&a, &b| features[a][feature].total_cmp(&features[b][feature]));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += targets[order[k]];
            let (xa, xb) = (features[order[k]][feature], features[order[k + 1]][feature]);
            if xa == xb {
                continue;
            }
            let n_left = k + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            // Maximizing sum_left^2/n_left + sum_right^2/n_right minimizes SSE.
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / n_left as f64
                + right_sum * right_sum / n_right as f64;
            if score <= base + 1e-12 {
                continue;
            }
            let threshold = 0.5 * (xa + xb);
            let better = match best {
                None => true,
                Some((s, _, _)) => score > s,
            };
            if better {
                best = Some((score, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}
