//! Two-model ensemble strategies: OR (either fires), AND (both must
//! fire), and a weighted probability average, each scored against the
//! constituent single models on the same records.

use serde::{Deserialize, Serialize};

use vmd_core::model::{classify, predict_proba, Decision, DecisionThreshold, Model};
use vmd_core::FeatureWindow;

use crate::error::{HarnessError, Result};
use crate::eval::{ConfusionCounts, LabeledRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum EnsembleStrategy {
    /// VM when either constituent says VM.
    Or,
    /// VM only when both constituents say VM.
    And,
    /// Threshold the weight-normalized average probability.
    Weighted { weight_a: f64, weight_c: f64 },
}

impl EnsembleStrategy {
    /// The stock strategy list with the default averaging weights.
    pub fn standard() -> Vec<Self> {
        vec![Self::Or, Self::And, Self::weighted_default()]
    }

    pub fn weighted_default() -> Self {
        Self::Weighted {
            weight_a: 0.3,
            weight_c: 0.4,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Or => "OR".into(),
            Self::And => "AND".into(),
            Self::Weighted { weight_a, weight_c } => {
                format!("weighted(a={weight_a}, c={weight_c})")
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Self::Weighted { weight_a, weight_c } = self {
            let ok = weight_a.is_finite()
                && weight_c.is_finite()
                && *weight_a >= 0.0
                && *weight_c >= 0.0
                && weight_a + weight_c > 0.0;
            if !ok {
                return Err(HarnessError::Input(format!(
                    "averaging weights must be non-negative with a positive sum, got ({weight_a}, {weight_c})"
                )));
            }
        }
        Ok(())
    }
}

/// Metrics for one decision rule, with the ids it got wrong so error
/// sets can be compared across rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub name: String,
    pub counts: ConfusionCounts,
    pub false_negative_ids: Vec<String>,
    pub false_positive_ids: Vec<String>,
}

impl StrategyReport {
    fn from_decisions(name: String, records: &[LabeledRecord], decisions: &[Decision]) -> Self {
        let mut counts = ConfusionCounts::default();
        let mut false_negative_ids = Vec::new();
        let mut false_positive_ids = Vec::new();
        for (r, &predicted) in records.iter().zip(decisions) {
            counts.record(r.label, predicted);
            match (r.label, predicted) {
                (Decision::Vm, Decision::Nvm) => false_negative_ids.push(r.id.clone()),
                (Decision::Nvm, Decision::Vm) => false_positive_ids.push(r.id.clone()),
                _ => {}
            }
        }
        Self {
            name,
            counts,
            false_negative_ids,
            false_positive_ids,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub single_a: StrategyReport,
    pub single_c: StrategyReport,
    pub strategies: Vec<StrategyReport>,
}

/// Score both single models and each requested ensemble rule at one
/// threshold.
pub fn ensemble_compare(
    model_a: &Model,
    model_c: &Model,
    records: &[LabeledRecord],
    tau: DecisionThreshold,
    window: FeatureWindow,
    strategies: &[EnsembleStrategy],
) -> Result<EnsembleReport> {
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
    for s in strategies {
        s.validate()?;
    }

    let probs: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            Ok((
                predict_proba(model_a, &r.features)?,
                predict_proba(model_c, &r.features)?,
            ))
        })
        .collect::<Result<_>>()?;

    let decide = |p: f64| classify(p, tau);
    let singles_a: Vec<Decision> = probs.iter().map(|&(a, _)| decide(a)).collect();
    let singles_c: Vec<Decision> = probs.iter().map(|&(_, c)| decide(c)).collect();

    let strategies = strategies
        .iter()
        .map(|strategy| {
            let decisions: Vec<Decision> = probs
                .iter()
                .map(|&(pa, pc)| match strategy {
                    EnsembleStrategy::Or => {
                        if decide(pa) == Decision::Vm || decide(pc) == Decision::Vm {
                            Decision::Vm
                        } else {
                            Decision::Nvm
                        }
                    }
                    EnsembleStrategy::And => {
                        if decide(pa) == Decision::Vm && decide(pc) == Decision::Vm {
                            Decision::Vm
                        } else {
                            Decision::Nvm
                        }
                    }
                    EnsembleStrategy::Weighted { weight_a, weight_c } => {
                        decide((weight_a * pa + weight_c * pc) / (weight_a + weight_c))
                    }
                })
                .collect();
            StrategyReport::from_decisions(strategy.name(), records, &decisions)
        })
        .collect();

    Ok(EnsembleReport {
        single_a: StrategyReport::from_decisions("single A".into(), records, &singles_a),
        single_c: StrategyReport::from_decisions("single C".into(), records, &singles_c),
        strategies,
    })
}
