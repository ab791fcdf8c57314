//! The three classifier families, thresholded decisions, and the
//! versioned model file that makes a trained model portable.

mod bagged;
mod boosted;
mod linear;
mod tree;

pub use bagged::{train_bagged, BaggedEnsemble, BaggedParams};
pub use boosted::{train_boosted, BoostedEnsemble, BoostedParams};
pub use linear::{train_linear, LinearModel, LinearParams, Standardization};
pub use tree::TreeNode;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const MODEL_FORMAT: &str = "vmd-model";
pub const MODEL_VERSION: u32 = 1;

/// Final call outcome: voicemail or a live human (not-voicemail).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    #[serde(rename = "VM")]
    Vm,
    #[serde(rename = "NVM")]
    Nvm,
}

impl std::fmt::Display for Decision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Decision::Vm => "VM",
            Decision::Nvm => "NVM",
        })
    }
}

/// Decision threshold tau, valid over the published sweep range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DecisionThreshold {
    tau: f64,
}

impl DecisionThreshold {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.30..=0.95).contains(&tau) {
            return Err(CoreError::Config(format!(
                "threshold must lie in [0.30, 0.95], got {tau}"
            )));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

impl Default for DecisionThreshold {
    fn default() -> Self {
        Self { tau: 0.5 }
    }
}

/// VM iff the probability reaches the threshold.
pub fn classify(probability: f64, threshold: DecisionThreshold) -> Decision {
    if probability >= threshold.tau {
        Decision::Vm
    } else {
        Decision::Nvm
    }
}

/// One training example: a feature vector and its binary label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledVector {
    pub features: Vec<f64>,
    pub is_vm: bool,
}

/// A trained classifier of any family, tagged for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Model {
    Boosted(BoostedEnsemble),
    Bagged(BaggedEnsemble),
    Linear(LinearModel),
}

impl Model {
    pub fn family_name(&self) -> &'static str {
        match self {
            Model::Boosted(_) => "boosted",
            Model::Bagged(_) => "bagged",
            Model::Linear(_) => "linear",
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Boosted(m) => m.n_features,
            Model::Bagged(m) => m.n_features,
            Model::Linear(m) => m.weights.len(),
        }
    }

    /// Deterministic inference-cost proxy (worst-case node visits plus
    /// per-tree overhead); used to rank equally accurate grid
    /// configurations without timing noise.
    pub fn op_count(&self) -> u64 {
        match self {
            Model::Boosted(m) => m
                .trees
                .iter()
                .map(|t| t.depth() as u64 + 1)
                .sum::<u64>(),
            Model::Bagged(m) => m
                .trees
                .iter()
                .map(|t| t.depth() as u64 + 1)
                .sum::<u64>(),
            Model::Linear(m) => m.weights.len() as u64 + 1,
        }
    }
}

/// Probability that the features describe a voicemail.
pub fn predict_proba(model: &Model, features: &[f64]) -> Result<f64> {
    let expected = model.n_features();
    if features.len() != expected {
        return Err(CoreError::Input(format!(
            "{} model expects {expected} features, got {}",
            model.family_name(),
            features.len()
        )));
    }
    Ok(match model {
        Model::Boosted(m) => m.predict_proba(features),
        Model::Bagged(m) => m.predict_proba(features),
        Model::Linear(m) => m.predict_proba(features),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// The on-disk model document: versioned JSON with named fields, the
/// feature order baked in, and the family-specific parameters inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub window_ms: u32,
    #[serde(flatten)]
    pub model: Model,
    pub metadata: ModelMetadata,
}

impl SavedModel {
    pub fn new(
        model: Model,
        feature_names: Vec<String>,
        window_ms: u32,
        metadata: ModelMetadata,
    ) -> Result<Self> {
        if feature_names.len() != model.n_features() {
            return Err(CoreError::ModelFile(format!(
                "{} feature names for a {}-feature model",
                feature_names.len(),
                model.n_features()
            )));
        }
        Ok(Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            feature_names,
            window_ms,
            model,
            metadata,
        })
    }
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(saved)
        .map_err(|e| CoreError::ModelFile(format!("serialization failed: {e}")))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path).map_err(|e| {
        CoreError::ModelFile(format!("cannot read model file {}: {e}", path.display()))
    })?;
    // version gate first so a newer format fails with the right story
    // rather than as a field mismatch
    #[derive(Deserialize)]
    struct Header {
        format: String,
        version: u32,
    }
    let header: Header = serde_json::from_slice(&bytes).map_err(|e| {
        CoreError::ModelFile(format!("corrupt model file {}: {e}", path.display()))
    })?;
    if header.format != MODEL_FORMAT {
        return Err(CoreError::ModelFile(format!(
            "format tag '{}' is not '{MODEL_FORMAT}'",
            header.format
        )));
    }
    if header.version != MODEL_VERSION {
        return Err(CoreError::ModelFile(format!(
            "model file version {} unsupported (this build reads version {MODEL_VERSION})",
            header.version
        )));
    }

    let saved: SavedModel = serde_json::from_slice(&bytes).map_err(|e| {
        CoreError::ModelFile(format!("corrupt model file {}: {e}", path.display()))
    })?;
    if saved.feature_names.len() != saved.model.n_features() {
        return Err(CoreError::ModelFile(format!(
            "feature_names lists {} names but the model takes {} features",
            saved.feature_names.len(),
            saved.model.n_features()
        )));
    }
    Ok(saved)
}

/// Logistic sigmoid with the argument clamped so outputs stay strictly
/// inside (0, 1) in f64.
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z.clamp(-36.0, 36.0)).exp())
}

/// Numerically stable binary cross-entropy of a logit against y in
/// {0, 1}: softplus(z) - y*z.
pub(crate) fn logistic_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
}

/// Common checks for the train_* entry points; returns the feature
/// dimensionality.
fn validate_training_set(data: &[LabeledVector], require_both_classes: bool) -> Result<usize> {
    let Some(first) = data.first() else {
        return Err(CoreError::Training("training set is empty".into()));
    };
    let d = first.features.len();
    if d == 0 {
        return Err(CoreError::Training("feature vectors are empty".into()));
    }
    for (i, row) in data.iter().enumerate() {
        if row.features.len() != d {
            return Err(CoreError::Training(format!(
                "row {i} has {} features, row 0 has {d}",
                row.features.len()
            )));
        }
        if let Some(bad) = row.features.iter().find(|v| !v.is_finite()) {
            return Err(CoreError::Training(format!(
                "row {i} contains a non-finite feature value {bad}"
            )));
        }
    }
    if require_both_classes {
        let vm = data.iter().filter(|r| r.is_vm).count();
        if data.len() < 2 || vm == 0 || vm == data.len() {
            return Err(CoreError::Training(
                "need at least 2 examples with both classes present".into(),
            ));
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests;
