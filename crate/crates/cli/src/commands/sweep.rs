use anyhow::bail;
use serde_json::json;
use vmd_core::vad::VadParams;
use vmd_harness::dataset::{grid_records_from_manifest, labeled_records};
use vmd_harness::eval::{sweep_thresholds, LabelSource};
use vmd_harness::grid::FeatureSet;
use vmd_harness::synth::load_manifest;

use super::{load_saved_model, resolve_backend, resolve_window, CommandOutput, Ctx};
use crate::args::SweepArgs;
use crate::table;

/// The saved feature order fixes the view; the dimension is enough to
/// tell the three views apart.
pub(crate) fn feature_set_for(n_features: usize) -> anyhow::Result<FeatureSet> {
    Ok(match n_features {
        15 => FeatureSet::Vad15,
        8 => FeatureSet::CrossChannel8,
        23 => FeatureSet::Combined23,
        other => bail!("model has {other} features; expected 15, 8, or 23"),
    })
}

pub fn run(args: &SweepArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let (model_path, saved) = load_saved_model(&args.model, &ctx.file)?;
    let set = feature_set_for(saved.model.n_features())?;
    let window = resolve_window(args.window, &ctx.file, saved.window_ms)?;
    let backend = resolve_backend(&args.backend, &ctx.file)?;
    let entries = load_manifest(&args.manifest)?;

    let records = grid_records_from_manifest(&entries, &[window], &VadParams::default(), &backend)?;
    let mut labeled = labeled_records(&records, window, set, LabelSource::Expert)?;
    for (record, entry) in labeled.iter_mut().zip(&entries) {
        record.source = entry.source;
    }
    let rows = sweep_thresholds(&saved.model, &labeled, window)?;

    let mut human = table::keyed(&[
        ("manifest", args.manifest.display().to_string()),
        ("model", format!("{} ({})", saved.model.family_name(), model_path.display())),
        ("feature_set", set.name().to_string()),
        ("window_ms", window.window_ms().to_string()),
        ("records", labeled.len().to_string()),
    ]);
    human.push('\n');
    human.push_str(&table::columns(
        &["tau", "accuracy", "vm_recall", "nvm_recall", "tp", "tn", "fp", "fn"],
        &rows
            .iter()
            .map(|r| {
                let c = &r.counts;
                vec![
                    format!("{:.2}", r.tau),
                    format!("{:.6}", c.accuracy()),
                    format!("{:.6}", c.vm_recall()),
                    format!("{:.6}", c.nvm_recall()),
                    c.true_positives.to_string(),
                    c.true_negatives.to_string(),
                    c.false_positives.to_string(),
                    c.false_negatives.to_string(),
                ]
            })
            .collect::<Vec<_>>(),
    ));

    let json = json!({
        "v": 1,
        "kind": "sweep",
        "manifest": args.manifest.display().to_string(),
        "model_path": model_path.display().to_string(),
        "family": saved.model.family_name(),
        "feature_set": set.name(),
        "window_ms": window.window_ms(),
        "records": labeled.len(),
        "rows": rows,
    });
    Ok(CommandOutput { human, json })
}
