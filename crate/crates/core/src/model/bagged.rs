//! Classifier B: bagged deep trees with majority voting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{partition, scan_splits, TreeNode};
use super::{validate_training_set, LabeledVector};
use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaggedParams {
    pub n_trees: usize,
    pub seed: u64,
}

impl Default for BaggedParams {
    fn default() -> Self {
        Self { n_trees: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedEnsemble {
    pub n_features: usize,
    pub seed: u64,
    /// Leaf values are the VM fraction of the leaf's bootstrap samples.
    pub trees: Vec<TreeNode>,
}

impl BaggedEnsemble {
    /// Fraction of trees voting VM; times n_trees it is an exact
    /// integer vote count.
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        let votes = self
            .trees
            .iter()
            .filter(|t| t.predict(features) >= 0.5)
            .count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Bootstrap aggregation: each tree sees n draws with replacement and
/// grows to purity under Gini impurity. Unlike the other families a
/// single example (or a single class) is a valid training set; every
/// tree then degenerates to one pure leaf.
pub fn train_bagged(data: &[LabeledVector], params: &BaggedParams) -> Result<BaggedEnsemble> {
    let n_features = validate_training_set(data, false)?;
    if params.n_trees == 0 {
        return Err(CoreError::Training("n_trees must be at least 1".into()));
    }

    let n = data.len();
    let labels: Vec<f64> = data
        .iter()
        .map(|d| if d.is_vm { 1.0 } else { 0.0 })
        .collect();
    let features: Vec<Vec<f64>> = data.iter().map(|d| d.features.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        trees.push(grow_gini_tree(&features, &labels, &sample, n_features));
    }

    Ok(BaggedEnsemble {
        n_features,
        seed: params.seed,
        trees,
    })
}

fn grow_gini_tree(
    features: &[Vec<f64>],
    labels: &[f64],
    indices: &[usize],
    n_features: usize,
) -> TreeNode {
    let vm: f64 = indices.iter().map(|&i| labels[i]).sum();
    let n = indices.len() as f64;
    let fraction = vm / n;

    if fraction == 0.0 || fraction == 1.0 {
        return TreeNode::Leaf { value: fraction };
    }

    // minimize n_l*gini_l + n_r*gini_r, expressed as a gain over the
    // parent so the shared scanner's "higher is better" applies
    let parent_cost = n * 2.0 * fraction * (1.0 - fraction);
    let best = scan_splits(features, indices, n_features, |sorted, k| {
        let vm_left: f64 = sorted[..k].iter().map(|&i| labels[i]).sum();
        let nl = k as f64;
        let nr = sorted.len() as f64 - nl;
        let pl = vm_left / nl;
        let pr = (vm - vm_left) / nr;
        parent_cost - (nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr))
    });

    match best {
        // impure but unsplittable (duplicate rows with mixed labels)
        None => TreeNode::Leaf { value: fraction },
        Some(split) => {
            let (li, ri) = partition(features, indices, split.feature_index, split.threshold);
            TreeNode::Split {
                feature_index: split.feature_index,
                threshold: split.threshold,
                left: Box::new(grow_gini_tree(features, labels, &li, n_features)),
                right: Box::new(grow_gini_tree(features, labels, &ri, n_features)),
            }
        }
    }
}
