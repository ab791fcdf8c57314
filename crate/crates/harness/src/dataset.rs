//! Bridges audio to the evaluators: extract per-window feature views
//! from calls (in memory or from a corpus on disk), project them onto
//! a feature set, split stratified by label, and convert to training
//! vectors. Extraction goes through the same pipeline stages as the
//! live detector, so trained models see serving-identical features.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use vmd_core::audio::read_wav;
use vmd_core::model::{Decision, LabeledVector};
use vmd_core::vad::{BackendSpec, VadParams};
use vmd_core::{FeatureExtractor, FeatureWindow, StereoPcm};

use crate::error::{HarnessError, Result};
use crate::eval::{LabelSource, LabeledRecord};
use crate::grid::{FeatureSet, GridRecord, RecordView};
use crate::synth::ManifestEntry;

pub use vmd_core::vad::{reference_backend, REFERENCE_RMS_THRESHOLD};

/// Extract both feature views of one call at each window.
pub fn extract_views(
    stereo: &StereoPcm,
    windows: &[FeatureWindow],
    vad: &VadParams,
    backend: &BackendSpec,
) -> Result<BTreeMap<u32, RecordView>> {
    let mut views = BTreeMap::new();
    for &window in windows {
        let mut extractor = FeatureExtractor::new(window, vad.clone(), backend)?;
        let extraction = extractor.extract_stereo(stereo)?;
        views.insert(
            window.window_ms(),
            RecordView {
                temporal: extraction.callee.features.to_array(),
                cross_channel: extraction.features.to_array(),
            },
        );
    }
    Ok(views)
}

/// Featurize labeled calls in parallel, preserving order.
pub fn grid_records_from_calls(
    calls: &[(String, StereoPcm, Decision)],
    windows: &[FeatureWindow],
    vad: &VadParams,
    backend: &BackendSpec,
) -> Result<Vec<GridRecord>> {
    calls
        .par_iter()
        .map(|(id, stereo, label)| {
            Ok(GridRecord {
                id: id.clone(),
                label: *label,
                views: extract_views(stereo, windows, vad, backend)?,
            })
        })
        .collect()
}

/// Featurize a corpus straight from its manifest entries.
pub fn grid_records_from_manifest(
    entries: &[ManifestEntry],
    windows: &[FeatureWindow],
    vad: &VadParams,
    backend: &BackendSpec,
) -> Result<Vec<GridRecord>> {
    entries
        .par_iter()
        .map(|e| {
            let stereo = read_wav(&e.path)?;
            Ok(GridRecord {
                id: e.path.display().to_string(),
                label: e.label,
                views: extract_views(&stereo, windows, vad, backend)?,
            })
        })
        .collect()
}

/// True when the WAV on disk is single-channel. Cross-channel
/// features need real stereo; decoding alone cannot tell, because the
/// decoder fabricates a silent bot channel for mono input.
pub fn wav_is_mono(path: &Path) -> Result<bool> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| HarnessError::Input(format!("{}: {e}", path.display())))?;
    Ok(reader.spec().channels == 1)
}

/// Project grid records onto one (window, feature set) as evaluation
/// records.
pub fn labeled_records(
    records: &[GridRecord],
    window: FeatureWindow,
    feature_set: FeatureSet,
    source: LabelSource,
) -> Result<Vec<LabeledRecord>> {
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
            Ok(LabeledRecord {
                id: r.id.clone(),
                features: feature_set.assemble(&view.temporal, &view.cross_channel),
                window,
                label: r.label,
                source,
            })
        })
        .collect()
}

pub fn training_vectors(records: &[LabeledRecord]) -> Vec<LabeledVector> {
    records
        .iter()
        .map(|r| LabeledVector {
            features: r.features.clone(),
            is_vm: r.label == Decision::Vm,
        })
        .collect()
}

/// Deterministic stratified split: shuffle each class separately and
/// hold out `eval_fraction` of it (rounded up, so a present class is
/// never absent from eval). Returns (train, eval) index lists in
/// ascending order.
pub fn stratified_split_indices(
    labels: &[Decision],
    eval_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if labels.is_empty() {
        return Err(HarnessError::Input("nothing to split".into()));
    }
    if !(eval_fraction > 0.0 && eval_fraction < 1.0) {
        return Err(HarnessError::Input(format!(
            "eval fraction must lie strictly inside (0, 1), got {eval_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for class in [Decision::Vm, Decision::Nvm] {
        let mut indices: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        indices.shuffle(&mut rng);
        let held_out = ((indices.len() as f64) * eval_fraction).ceil() as usize;
        let held_out = held_out.min(indices.len());
        eval.extend_from_slice(&indices[..held_out]);
        train.extend_from_slice(&indices[held_out..]);
    }
    train.sort_unstable();
    eval.sort_unstable();
    Ok((train, eval))
}

#[cfg(test)]
mod tests;
