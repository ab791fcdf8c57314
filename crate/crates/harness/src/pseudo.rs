//! Confidence-tier pseudo-labeling: a cross-channel model scores each
//! unlabeled call, scores are stratified into tiers, and only the
//! STRONG tiers are exported as training labels. Calls without
//! cross-channel evidence (mono recordings) are UNCERTAIN by rule,
//! since the tiers exist to grade exactly that evidence.

use serde::{Deserialize, Serialize};

use vmd_core::model::{predict_proba, Decision, Model};

use crate::error::{HarnessError, Result};
use crate::eval::LabelSource;

pub const STRONG_VM_FLOOR: f64 = 0.90;
pub const STRONG_NVM_CEILING: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TierLabel {
    StrongVm,
    StrongNvm,
    Moderate,
    Uncertain,
}

impl std::fmt::Display for TierLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::StrongVm => "STRONG_VM",
            Self::StrongNvm => "STRONG_NVM",
            Self::Moderate => "MODERATE",
            Self::Uncertain => "UNCERTAIN",
        })
    }
}

/// Tier of a probability: strictly above 0.90 or strictly below 0.10
/// is STRONG; the closed band between is MODERATE. Total on [0, 1].
pub fn assign_tier(p: f64) -> TierLabel {
    if p > STRONG_VM_FLOOR {
        TierLabel::StrongVm
    } else if p < STRONG_NVM_CEILING {
        TierLabel::StrongNvm
    } else {
        TierLabel::Moderate
    }
}

/// One call to pseudo-label. `cross_channel` is None when the
/// recording is mono and the features cannot be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoInput {
    pub id: String,
    pub cross_channel: Option<[f64; 8]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieredRecord {
    pub id: String,
    /// None under the mono rule.
    pub probability: Option<f64>,
    pub tier: TierLabel,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierCensus {
    pub strong_vm: u64,
    pub strong_nvm: u64,
    pub moderate: u64,
    pub uncertain: u64,
}

impl TierCensus {
    fn count(&mut self, tier: TierLabel) {
        match tier {
            TierLabel::StrongVm => self.strong_vm += 1,
            TierLabel::StrongNvm => self.strong_nvm += 1,
            TierLabel::Moderate => self.moderate += 1,
            TierLabel::Uncertain => self.uncertain += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.strong_vm + self.strong_nvm + self.moderate + self.uncertain
    }
}

/// A STRONG-tier record exported as a training label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabel {
    pub id: String,
    pub label: Decision,
    pub source: LabelSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoReport {
    pub records: Vec<TieredRecord>,
    pub census: TierCensus,
}

impl PseudoReport {
    /// Training export: STRONG_VM and STRONG_NVM records only.
    pub fn strong_exports(&self) -> Vec<PseudoLabel> {
        self.records
            .iter()
            .filter_map(|r| {
                let label = match r.tier {
                    TierLabel::StrongVm => Decision::Vm,
                    TierLabel::StrongNvm => Decision::Nvm,
                    TierLabel::Moderate | TierLabel::Uncertain => return None,
                };
                Some(PseudoLabel {
                    id: r.id.clone(),
                    label,
                    source: LabelSource::Pseudo,
                })
            })
            .collect()
    }
}

/// Tier every input with the cross-channel model.
pub fn pseudo_label(xch_model: &Model, inputs: &[PseudoInput]) -> Result<PseudoReport> {
    if xch_model.n_features() != 8 {
        return Err(HarnessError::Input(format!(
            "pseudo-labeling uses the 8 cross-channel features; the model takes {}",
            xch_model.n_features()
        )));
    }
    let mut census = TierCensus::default();
    let mut records = Vec::with_capacity(inputs.len());
    for input in inputs {
        let (probability, tier) = match &input.cross_channel {
            Some(features) => {
                let p = predict_proba(xch_model, features)?;
                (Some(p), assign_tier(p))
            }
            None => (None, TierLabel::Uncertain),
        };
        census.count(tier);
        records.push(TieredRecord {
            id: input.id.clone(),
            probability,
            tier,
        });
    }
    Ok(PseudoReport { records, census })
}
