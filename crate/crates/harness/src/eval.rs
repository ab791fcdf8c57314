//! Labeled-record evaluation: confusion counts, accuracy and
//! per-class recalls, per-record predictions for error analysis, and
//! the 14-point threshold sweep.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use vmd_core::model::{classify, predict_proba, Decision, DecisionThreshold, Model};
use vmd_core::FeatureWindow;

use crate::error::{HarnessError, Result};

/// Where a record's label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Expert,
    Pseudo,
    Synthetic,
}

impl fmt::Display for LabelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Expert => "expert",
            Self::Pseudo => "pseudo",
            Self::Synthetic => "synthetic",
        })
    }
}

impl FromStr for LabelSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "expert" => Ok(Self::Expert),
            "pseudo" => Ok(Self::Pseudo),
            "synthetic" => Ok(Self::Synthetic),
            other => Err(HarnessError::Input(format!(
                "unknown label source '{other}' (expected expert, pseudo, or synthetic)"
            ))),
        }
    }
}

/// One pre-extracted feature vector with its ground truth. The window
/// the features were computed at travels with the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub id: String,
    pub features: Vec<f64>,
    pub window: FeatureWindow,
    pub label: Decision,
    pub source: LabelSource,
}

/// VM is the positive class: fp counts NVM predicted as VM.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: u64,
    pub true_negatives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, actual: Decision, predicted: Decision) {
        match (actual, predicted) {
            (Decision::Vm, Decision::Vm) => self.true_positives += 1,
            (Decision::Nvm, Decision::Nvm) => self.true_negatives += 1,
            (Decision::Nvm, Decision::Vm) => self.false_positives += 1,
            (Decision::Vm, Decision::Nvm) => self.false_negatives += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.true_negatives + self.false_positives + self.false_negatives
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_positives + self.true_negatives) as f64 / self.total() as f64
    }

    /// Recall over an absent class is vacuously perfect.
    pub fn vm_recall(&self) -> f64 {
        let positives = self.true_positives + self.false_negatives;
        if positives == 0 {
            1.0
        } else {
            self.true_positives as f64 / positives as f64
        }
    }

    pub fn nvm_recall(&self) -> f64 {
        let negatives = self.true_negatives + self.false_positives;
        if negatives == 0 {
            1.0
        } else {
            self.true_negatives as f64 / negatives as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordPrediction {
    pub id: String,
    pub probability: f64,
    pub predicted: Decision,
    pub actual: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub counts: ConfusionCounts,
    /// One entry per record, in input order.
    pub predictions: Vec<RecordPrediction>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        self.counts.accuracy()
    }

    /// Records the model got wrong, for Table-8-style error listings.
    pub fn errors(&self) -> impl Iterator<Item = &RecordPrediction> {
        self.predictions.iter().filter(|p| p.predicted != p.actual)
    }
}

fn check_records(records: &[LabeledRecord], window: FeatureWindow) -> Result<()> {
    if records.is_empty() {
        return Err(HarnessError::Input("no records to evaluate".into()));
    }
    for r in records {
        if r.window != window {
            return Err(HarnessError::Input(format!(
                "record '{}' carries window {} ms, evaluation runs at {} ms",
                r.id,
                r.window.window_ms(),
                window.window_ms()
            )));
        }
    }
    Ok(())
}

fn probabilities(model: &Model, records: &[LabeledRecord]) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| predict_proba(model, &r.features).map_err(HarnessError::from))
        .collect()
}

/// Score every record at one threshold.
pub fn evaluate(
    model: &Model,
    records: &[LabeledRecord],
    tau: DecisionThreshold,
    window: FeatureWindow,
) -> Result<EvalReport> {
    check_records(records, window)?;
    let probs = probabilities(model, records)?;

    let mut counts = ConfusionCounts::default();
    let mut predictions = Vec::with_capacity(records.len());
    for (r, &p) in records.iter().zip(&probs) {
        let predicted = classify(p, tau);
        counts.record(r.label, predicted);
        predictions.push(RecordPrediction {
            id: r.id.clone(),
            probability: p,
            predicted,
            actual: r.label,
        });
    }
    Ok(EvalReport {
        counts,
        predictions,
    })
}

/// The standard 14-threshold ladder, 0.30 through 0.95 in 0.05 steps.
pub fn standard_thresholds() -> Vec<DecisionThreshold> {
    (30..=95)
        .step_by(5)
        .map(|i| DecisionThreshold::new(i as f64 / 100.0).expect("ladder lies inside [0.30, 0.95]"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub counts: ConfusionCounts,
}

impl SweepRow {
    pub fn accuracy(&self) -> f64 {
        self.counts.accuracy()
    }
}

/// Accuracy at each standard threshold. Probabilities are computed
/// once; only the cut point moves.
pub fn sweep_thresholds(
    model: &Model,
    records: &[LabeledRecord],
    window: FeatureWindow,
) -> Result<Vec<SweepRow>> {
    check_records(records, window)?;
    let probs = probabilities(model, records)?;

    Ok(standard_thresholds()
        .into_iter()
        .map(|tau| {
            let mut counts = ConfusionCounts::default();
            for (r, &p) in records.iter().zip(&probs) {
                counts.record(r.label, classify(p, tau));
            }
            SweepRow {
                tau: tau.tau(),
                counts,
            }
        })
        .collect())
}
