//! Classifier A: gradient-boosted shallow regression trees.

use serde::{Deserialize, Serialize};

use super::tree::{partition, scan_splits, TreeNode};
use super::{logistic_loss, sigmoid, validate_training_set, LabeledVector};
use crate::error::{CoreError, Result};

/// Leaf log-odds contributions stay inside this magnitude; the sigmoid
/// is flat far outside it anyway.
const MAX_LEAF_VALUE: f64 = 15.0;
const MAX_BACKTRACK_HALVINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedParams {
    pub n_trees: usize,
    pub max_depth: u32,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BoostedParams {
    fn default() -> Self {
        Self {
            n_trees: 50,
            max_depth: 2,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    /// Log-odds of the training class prior.
    pub base_score: f64,
    pub learning_rate: f64,
    pub max_depth: u32,
    pub n_features: usize,
    pub trees: Vec<TreeNode>,
    /// Mean training loss after the prior alone, then after each stage.
    pub stage_losses: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        let margin: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        sigmoid(self.base_score + self.learning_rate * margin)
    }
}

/// Stagewise logistic boosting: each tree fits the negative gradients
/// (y - p) by variance reduction, leaves take a Newton step, and the
/// whole tree is deterministically back-scaled by halving until the
/// training loss does not increase.
pub fn train_boosted(data: &[LabeledVector], params: &BoostedParams) -> Result<BoostedEnsemble> {
    let n_features = validate_training_set(data, true)?;
    if params.n_trees > 0 && params.max_depth == 0 {
        return Err(CoreError::Training("max_depth must be at least 1".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(CoreError::Training(format!(
            "learning_rate must be in (0,1], got {}",
            params.learning_rate
        )));
    }

    let n = data.len();
    let labels: Vec<f64> = data
        .iter()
        .map(|d| if d.is_vm { 1.0 } else { 0.0 })
        .collect();
    let features: Vec<Vec<f64>> = data.iter().map(|d| d.features.clone()).collect();

    let prior = labels.iter().sum::<f64>() / n as f64;
    let base_score = (prior / (1.0 - prior)).ln();

    let mut margins = vec![base_score; n];
    let mean_loss = |m: &[f64]| {
        m.iter()
            .zip(&labels)
            .map(|(&z, &y)| logistic_loss(z, y))
            .sum::<f64>()
            / n as f64
    };

    let mut stage_losses = vec![mean_loss(&margins)];
    let mut trees = Vec::with_capacity(params.n_trees);
    let all_indices: Vec<usize> = (0..n).collect();

    for _ in 0..params.n_trees {
        let mut grad = vec![0.0; n]; // residual y - p
        let mut hess = vec![0.0; n]; // p (1 - p)
        for i in 0..n {
            let p = sigmoid(margins[i]);
            grad[i] = labels[i] - p;
            hess[i] = p * (1.0 - p);
        }

        let mut tree = grow_regression_tree(
            &features,
            &grad,
            &hess,
            &all_indices,
            n_features,
            params.max_depth,
        );

        // per-sample contribution at scale 1
        let deltas: Vec<f64> = features.iter().map(|x| tree.predict(x)).collect();
        let prev_loss = *stage_losses.last().unwrap();

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_BACKTRACK_HALVINGS {
            let candidate: Vec<f64> = margins
                .iter()
                .zip(&deltas)
                .map(|(&m, &d)| m + params.learning_rate * scale * d)
                .collect();
            let loss = mean_loss(&candidate);
            if loss <= prev_loss + 1e-12 {
                accepted = Some((candidate, loss, scale));
                break;
            }
            scale /= 2.0;
        }

        match accepted {
            Some((candidate, loss, scale)) => {
                if scale != 1.0 {
                    scale_leaves(&mut tree, scale);
                }
                margins = candidate;
                stage_losses.push(loss.min(prev_loss));
            }
            None => {
                // no scale helps: contribute nothing this stage
                tree = TreeNode::Leaf { value: 0.0 };
                stage_losses.push(prev_loss);
            }
        }
        trees.push(tree);
    }

    Ok(BoostedEnsemble {
        base_score,
        learning_rate: params.learning_rate,
        max_depth: params.max_depth,
        n_features,
        trees,
        stage_losses,
    })
}

/// Depth-bounded regression tree on the gradients. Split gain is the
/// variance-reduction surrogate (sum of squared child residual means);
/// leaf values are the Newton step sum(grad) / sum(hess).
fn grow_regression_tree(
    features: &[Vec<f64>],
    grad: &[f64],
    hess: &[f64],
    indices: &[usize],
    n_features: usize,
    depth_left: u32,
) -> TreeNode {
    let leaf = |idx: &[usize]| {
        let g: f64 = idx.iter().map(|&i| grad[i]).sum();
        let h: f64 = idx.iter().map(|&i| hess[i]).sum();
        TreeNode::Leaf {
            value: (g / (h + 1e-12)).clamp(-MAX_LEAF_VALUE, MAX_LEAF_VALUE),
        }
    };

    if depth_left == 0 || indices.len() < 2 {
        return leaf(indices);
    }

    let total: f64 = indices.iter().map(|&i| grad[i]).sum();
    let best = scan_splits(features, indices, n_features, |sorted, k| {
        let left: f64 = sorted[..k].iter().map(|&i| grad[i]).sum();
        let right = total - left;
        let nl = k as f64;
        let nr = (sorted.len() - k) as f64;
        // constant term sum(grad^2) omitted: argmax is unchanged
        left * left / nl + right * right / nr - total * total / sorted.len() as f64
    });

    match best {
        None => leaf(indices),
        Some(split) => {
            let (li, ri) = partition(features, indices, split.feature_index, split.threshold);
            TreeNode::Split {
                feature_index: split.feature_index,
                threshold: split.threshold,
                left: Box::new(grow_regression_tree(
                    features,
                    grad,
                    hess,
                    &li,
                    n_features,
                    depth_left - 1,
                )),
                right: Box::new(grow_regression_tree(
                    features,
                    grad,
                    hess,
                    &ri,
                    n_features,
                    depth_left - 1,
                )),
            }
        }
    }
}

fn scale_leaves(node: &mut TreeNode, scale: f64) {
    match node {
        TreeNode::Leaf { value } => *value *= scale,
        TreeNode::Split { left, right, .. } => {
            scale_leaves(left, scale);
            scale_leaves(right, scale);
        }
    }
}
