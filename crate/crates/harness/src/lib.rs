//! Offline harness around the detection core: a deterministic
//! synthetic telephony corpus, labeled-record evaluation with
//! threshold sweeps, the configuration grid search, ensemble strategy
//! comparison, and confidence-tier pseudo-labeling.

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod grid;
pub mod pseudo;
pub mod synth;

pub use dataset::{grid_records_from_calls, labeled_records, stratified_split_indices};
pub use ensemble::{ensemble_compare, EnsembleReport, EnsembleStrategy, StrategyReport};
pub use error::{HarnessError, Result};
pub use eval::{
    evaluate, standard_thresholds, sweep_thresholds, ConfusionCounts, EvalReport, LabelSource,
    LabeledRecord, RecordPrediction, SweepRow,
};
pub use grid::{run_grid, FamilyConfig, FeatureSet, GridRecord, GridReport, GridSpec, ModelConfig};
pub use pseudo::{assign_tier, pseudo_label, PseudoInput, PseudoReport, TierCensus, TierLabel};
pub use synth::{generate_call, generate_corpus, load_manifest, ManifestEntry, SynthCall, SynthSpec};
