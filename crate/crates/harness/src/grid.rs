//! Configuration grid search: every (model x threshold x window x
//! feature set) combination trained and scored on a held-out set,
//! ranked, and exportable as a delimited table. Configurations run
//! independently and in parallel; a failing configuration is recorded
//! and skipped, never fatal.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vmd_core::model::{
    classify, predict_proba, train_bagged, train_boosted, train_linear, BaggedParams,
    BoostedParams, Decision, DecisionThreshold, LabeledVector, LinearParams, Model,
};
use vmd_core::FeatureWindow;

use crate::error::{HarnessError, Result};
use crate::eval::{standard_thresholds, ConfusionCounts};

/// Which feature columns a configuration trains and scores on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    /// The 15 temporal features.
    Vad15,
    /// The 8 cross-channel features.
    CrossChannel8,
    /// Both, temporal first.
    Combined23,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [Self::Vad15, Self::CrossChannel8, Self::Combined23];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vad15 => "VAD-15",
            Self::CrossChannel8 => "XCH-8",
            Self::Combined23 => "Combined-23",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Vad15 => 15,
            Self::CrossChannel8 => 8,
            Self::Combined23 => 23,
        }
    }

    pub fn assemble(&self, temporal: &[f64; 15], cross_channel: &[f64; 8]) -> Vec<f64> {
        match self {
            Self::Vad15 => temporal.to_vec(),
            Self::CrossChannel8 => cross_channel.to_vec(),
            Self::Combined23 => {
                let mut v = Vec::with_capacity(23);
                v.extend_from_slice(temporal);
                v.extend_from_slice(cross_channel);
                v
            }
        }
    }

    /// Feature names in [`FeatureSet::assemble`] order, for model files.
    pub fn feature_names(&self) -> Vec<String> {
        let temporal = vmd_core::features::FEATURE_NAMES.iter().copied();
        let cross = vmd_core::features::CROSS_CHANNEL_FEATURE_NAMES.iter().copied();
        match self {
            Self::Vad15 => temporal.map(String::from).collect(),
            Self::CrossChannel8 => cross.map(String::from).collect(),
            Self::Combined23 => temporal.chain(cross).map(String::from).collect(),
        }
    }
}

impl std::fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for one trainable family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyConfig {
    Boosted(BoostedParams),
    Bagged(BaggedParams),
    Linear(LinearParams),
}

impl FamilyConfig {
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Boosted(_) => "boosted",
            Self::Bagged(_) => "bagged",
            Self::Linear(_) => "linear",
        }
    }

    pub fn train(&self, data: &[LabeledVector]) -> vmd_core::Result<Model> {
        Ok(match self {
            Self::Boosted(p) => Model::Boosted(train_boosted(data, p)?),
            Self::Bagged(p) => Model::Bagged(train_bagged(data, p)?),
            Self::Linear(p) => Model::Linear(train_linear(data, p)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    pub family: FamilyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub models: Vec<ModelConfig>,
    pub thresholds: Vec<DecisionThreshold>,
    pub windows: Vec<FeatureWindow>,
    pub feature_sets: Vec<FeatureSet>,
}

impl GridSpec {
    /// The standard axes: the 14-threshold ladder, 3 s and 5 s
    /// windows, all three feature sets.
    pub fn standard(models: Vec<ModelConfig>) -> Self {
        Self {
            models,
            thresholds: standard_thresholds(),
            windows: vec![
                FeatureWindow::new(3000).expect("standard window"),
                FeatureWindow::new(5000).expect("standard window"),
            ],
            feature_sets: FeatureSet::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.thresholds.len() != 14 {
            return Err(HarnessError::Input(format!(
                "the threshold ladder has exactly 14 entries, got {}",
                self.thresholds.len()
            )));
        }
        if self.models.is_empty() || self.windows.is_empty() || self.feature_sets.is_empty() {
            return Err(HarnessError::Input(
                "grid axes must all be non-empty (models, windows, feature sets)".into(),
            ));
        }
        Ok(())
    }
}

/// Both feature views of one call at one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordView {
    pub temporal: [f64; 15],
    pub cross_channel: [f64; 8],
}

/// One call with ground truth and per-window feature views, ready for
/// any grid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub id: String,
    pub label: Decision,
    /// Keyed by window_ms.
    pub views: BTreeMap<u32, RecordView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub model: String,
    pub family: String,
    pub window_ms: u32,
    pub feature_set: FeatureSet,
    pub tau: f64,
    pub counts: ConfusionCounts,
    /// Work per prediction; the latency proxy used for tie-breaks.
    pub op_count: u64,
}

impl GridRow {
    pub fn accuracy(&self) -> f64 {
        self.counts.accuracy()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFailure {
    pub model: String,
    pub window_ms: u32,
    pub feature_set: FeatureSet,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    /// Ranked best-first: eval accuracy, then lower op count, then
    /// lower threshold.
    pub rows: Vec<GridRow>,
    pub failures: Vec<GridFailure>,
}

fn matrix(
    records: &[GridRecord],
    window: FeatureWindow,
    feature_set: FeatureSet,
) -> Result<Vec<(Vec<f64>, Decision)>> {
    records
        .iter()
        .map(|r| {
            let view = r.views.get(&window.window_ms()).ok_or_else(|| {
                HarnessError::Input(format!(
                    "record '{}' has no features at window {} ms",
                    r.id,
                    window.window_ms()
                ))
            })?;
            Ok((
                feature_set.assemble(&view.temporal, &view.cross_channel),
                r.label,
            ))
        })
        .collect()
}

fn run_config(
    config: &ModelConfig,
    window: FeatureWindow,
    feature_set: FeatureSet,
    thresholds: &[DecisionThreshold],
    train: &[GridRecord],
    eval: &[GridRecord],
) -> Result<Vec<GridRow>> {
    let train_matrix = matrix(train, window, feature_set)?;
    let eval_matrix = matrix(eval, window, feature_set)?;

    let training: Vec<LabeledVector> = train_matrix
        .into_iter()
        .map(|(features, label)| LabeledVector {
            features,
            is_vm: label == Decision::Vm,
        })
        .collect();
    let model = config.family.train(&training)?;

    let probs: Vec<(f64, Decision)> = eval_matrix
        .iter()
        .map(|(features, label)| Ok((predict_proba(&model, features)?, *label)))
        .collect::<Result<_>>()?;

    Ok(thresholds
        .iter()
        .map(|&tau| {
            let mut counts = ConfusionCounts::default();
            for &(p, actual) in &probs {
                counts.record(actual, classify(p, tau));
            }
            GridRow {
                model: config.name.clone(),
                family: config.family.family_name().to_string(),
                window_ms: window.window_ms(),
                feature_set,
                tau: tau.tau(),
                counts,
                op_count: model.op_count(),
            }
        })
        .collect())
}

/// Train and score the full grid. Train and eval sets must be
/// disjoint by record id.
pub fn run_grid(spec: &GridSpec, train: &[GridRecord], eval: &[GridRecord]) -> Result<GridReport> {
    spec.validate()?;
    if train.is_empty() || eval.is_empty() {
        return Err(HarnessError::Input(
            "grid needs non-empty train and eval sets".into(),
        ));
    }
    let train_ids: HashSet<&str> = train.iter().map(|r| r.id.as_str()).collect();
    if let Some(shared) = eval.iter().find(|r| train_ids.contains(r.id.as_str())) {
        return Err(HarnessError::Input(format!(
            "train and eval sets must be disjoint; '{}' appears in both",
            shared.id
        )));
    }

    let configs: Vec<(&ModelConfig, FeatureWindow, FeatureSet)> = spec
        .models
        .iter()
        .flat_map(|m| {
            spec.windows.iter().flat_map(move |&w| {
                spec.feature_sets.iter().map(move |&fs| (m, w, fs))
            })
        })
        .collect();

    // Each configuration is independent; collect preserves config
    // order, so aggregation does not depend on scheduling.
    let outcomes: Vec<std::result::Result<Vec<GridRow>, GridFailure>> = configs
        .par_iter()
        .map(|&(config, window, feature_set)| {
            run_config(config, window, feature_set, &spec.thresholds, train, eval).map_err(|e| {
                GridFailure {
                    model: config.name.clone(),
                    window_ms: window.window_ms(),
                    feature_set,
                    error: e.to_string(),
                }
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(mut r) => rows.append(&mut r),
            Err(f) => failures.push(f),
        }
    }

    rows.sort_by(|a, b| {
        b.accuracy()
            .total_cmp(&a.accuracy())
            .then(a.op_count.cmp(&b.op_count))
            .then(a.tau.total_cmp(&b.tau))
            .then(a.model.cmp(&b.model))
            .then(a.window_ms.cmp(&b.window_ms))
            .then(a.feature_set.name().cmp(b.feature_set.name()))
    });
    Ok(GridReport { rows, failures })
}

impl GridReport {
    /// Tab-delimited table, ranked, with a header row.
    pub fn to_delimited(&self) -> String {
        let mut out = String::from(
            "rank\tmodel\tfamily\twindow_ms\tfeature_set\ttau\ttp\ttn\tfp\tfn\taccuracy\tvm_recall\tnvm_recall\top_count\n",
        );
        for (i, r) in self.rows.iter().enumerate() {
            let c = &r.counts;
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{:.2}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                i + 1,
                r.model,
                r.family,
                r.window_ms,
                r.feature_set,
                r.tau,
                c.true_positives,
                c.true_negatives,
                c.false_positives,
                c.false_negatives,
                c.accuracy(),
                c.vm_recall(),
                c.nvm_recall(),
                r.op_count
            );
        }
        out
    }
}
