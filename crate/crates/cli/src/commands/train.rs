use anyhow::Context;
use serde_json::json;
use vmd_core::model::{save_model, BaggedParams, BoostedParams, LinearParams, ModelMetadata, SavedModel};
use vmd_core::vad::VadParams;
use vmd_harness::dataset::{
    grid_records_from_manifest, labeled_records, stratified_split_indices, training_vectors,
};
use vmd_harness::eval::{evaluate, LabelSource};
use vmd_harness::grid::{FamilyConfig, FeatureSet, GridRecord};
use vmd_harness::synth::load_manifest;

use super::{resolve_backend, resolve_tau, resolve_window, CommandOutput, Ctx};
use crate::args::{FamilyArg, FeatureSetArg, TrainArgs};
use crate::table;

pub(crate) fn feature_set(arg: FeatureSetArg) -> FeatureSet {
    match arg {
        FeatureSetArg::Vad15 => FeatureSet::Vad15,
        FeatureSetArg::Xch8 => FeatureSet::CrossChannel8,
        FeatureSetArg::Combined23 => FeatureSet::Combined23,
    }
}

pub(crate) fn family_config(arg: FamilyArg, seed: u64) -> FamilyConfig {
    match arg {
        FamilyArg::Boosted => FamilyConfig::Boosted(BoostedParams { seed, ..Default::default() }),
        FamilyArg::Bagged => FamilyConfig::Bagged(BaggedParams { seed, ..Default::default() }),
        FamilyArg::Linear => FamilyConfig::Linear(LinearParams::default()),
    }
}

/// Splits off a stratified eval set; a fraction of 0 trains on
/// everything and skips the evaluation.
fn split(
    records: Vec<vmd_harness::eval::LabeledRecord>,
    eval_fraction: f64,
    seed: u64,
) -> anyhow::Result<(Vec<vmd_harness::eval::LabeledRecord>, Vec<vmd_harness::eval::LabeledRecord>)> {
    if eval_fraction == 0.0 {
        return Ok((records, Vec::new()));
    }
    let labels: Vec<_> = records.iter().map(|r| r.label).collect();
    let (train_idx, eval_idx) = stratified_split_indices(&labels, eval_fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    Ok((pick(&train_idx), pick(&eval_idx)))
}

pub fn run(args: &TrainArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let entries = load_manifest(&args.manifest)?;
    let window = resolve_window(args.window, &ctx.file, 5000)?;
    let tau = resolve_tau(args.tau, &ctx.file)?;
    let backend = resolve_backend(&args.backend, &ctx.file)?;
    let vad = VadParams::default();
    let set = feature_set(args.feature_set);

    let grid_records: Vec<GridRecord> =
        grid_records_from_manifest(&entries, &[window], &vad, &backend)?;
    // labeled_records stamps one source; restore each entry's own.
    let mut labeled = labeled_records(&grid_records, window, set, LabelSource::Expert)?;
    for (record, entry) in labeled.iter_mut().zip(&entries) {
        record.source = entry.source;
    }
    let (train_set, eval_set) = split(labeled, args.eval_fraction, args.seed)?;

    let family = family_config(args.family, args.seed);
    let model = family
        .train(&training_vectors(&train_set))
        .context("training failed")?;
    let op_count = model.op_count();
    let saved = SavedModel::new(
        model,
        set.feature_names(),
        window.window_ms(),
        ModelMetadata {
            seed: Some(args.seed),
            ..Default::default()
        },
    )?;
    save_model(&saved, &args.output)
        .with_context(|| format!("writing model {}", args.output.display()))?;

    let eval = if eval_set.is_empty() {
        None
    } else {
        Some(evaluate(&saved.model, &eval_set, tau, window)?)
    };

    let mut pairs = vec![
        ("manifest", args.manifest.display().to_string()),
        ("records", entries.len().to_string()),
        ("train_records", train_set.len().to_string()),
        ("eval_records", eval_set.len().to_string()),
        ("family", family.family_name().to_string()),
        ("feature_set", set.name().to_string()),
        ("window_ms", window.window_ms().to_string()),
        ("seed", args.seed.to_string()),
        ("op_count", op_count.to_string()),
        ("output", args.output.display().to_string()),
    ];
    if let Some(report) = &eval {
        let c = &report.counts;
        pairs.extend([
            ("tau", format!("{:.2}", tau.tau())),
            ("accuracy", format!("{:.6}", c.accuracy())),
            ("vm_recall", format!("{:.6}", c.vm_recall())),
            ("nvm_recall", format!("{:.6}", c.nvm_recall())),
            (
                "confusion",
                format!(
                    "tp={} tn={} fp={} fn={}",
                    c.true_positives, c.true_negatives, c.false_positives, c.false_negatives
                ),
            ),
        ]);
    }
    let human = table::keyed(&pairs);

    let json = json!({
        "v": 1,
        "kind": "train",
        "manifest": args.manifest.display().to_string(),
        "records": entries.len(),
        "train_records": train_set.len(),
        "eval_records": eval_set.len(),
        "family": family.family_name(),
        "feature_set": set.name(),
        "window_ms": window.window_ms(),
        "tau": tau.tau(),
        "seed": args.seed,
        "op_count": op_count,
        "output": args.output.display().to_string(),
        "eval": eval,
    });
    Ok(CommandOutput { human, json })
}
