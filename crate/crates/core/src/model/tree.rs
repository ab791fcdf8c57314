//! Decision tree node shared by the boosted and bagged families.

use serde::{Deserialize, Serialize};

/// One tree node. Leaf values mean different things per family: a
/// log-odds contribution for boosted trees, a VM class fraction for
/// bagged trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    /// Walk to a leaf. Samples strictly below the threshold go left.
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature_index] < *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Depth in edges: a lone leaf has depth 0.
    pub fn depth(&self) -> u32 {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn internal_split_count(&self) -> u32 {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => {
                1 + left.internal_split_count() + right.internal_split_count()
            }
        }
    }

    /// Largest feature index referenced anywhere in the tree.
    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split {
                feature_index,
                left,
                right,
                ..
            } => {
                let child = left.max_feature_index().max(right.max_feature_index());
                Some(child.map_or(*feature_index, |c| c.max(*feature_index)))
            }
        }
    }
}

/// A candidate split found by an exhaustive scan.
pub(super) struct BestSplit {
    pub feature_index: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Exhaustive split search over all features. `score_split` receives
/// the sample indices sorted by feature value and the left-partition
/// size, and returns the split's gain (higher is better). Thresholds
/// are midpoints between consecutive distinct values, so `x < threshold`
/// reproduces the training partition exactly.
pub(super) fn scan_splits<F>(
    data: &[Vec<f64>],
    indices: &[usize],
    n_features: usize,
    mut score_split: F,
) -> Option<BestSplit>
where
    F: FnMut(&[usize], usize) -> f64,
{
    let mut best: Option<BestSplit> = None;
    let mut sorted: Vec<usize> = indices.to_vec();

    // f indexes columns across rows picked by the comparator, so an
    // enumerate() over data does not apply here.
    #[allow(clippy::needless_range_loop)]
    for f in 0..n_features {
        sorted.sort_unstable_by(|&a, &b| data[a][f].total_cmp(&data[b][f]));
        for k in 1..sorted.len() {
            let lo = data[sorted[k - 1]][f];
            let hi = data[sorted[k]][f];
            if lo == hi {
                continue;
            }
            let threshold = lo + (hi - lo) / 2.0;
            // midpoint of adjacent f64 values can round onto an
            // endpoint; such a split would not separate anything
            if threshold <= lo || threshold > hi {
                continue;
            }
            let gain = score_split(&sorted, k);
            if gain > best.as_ref().map_or(1e-12, |b| b.gain) {
                best = Some(BestSplit {
                    feature_index: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Partition indices by the found split, preserving order.
pub(super) fn partition(
    data: &[Vec<f64>],
    indices: &[usize],
    feature_index: usize,
    threshold: f64,
) -> (Vec<usize>, Vec<usize>) {
    indices
        .iter()
        .partition(|&&i| data[i][feature_index] < threshold)
}
