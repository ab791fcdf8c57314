use std::fmt::Write as _;

use serde_json::json;
use vmd_core::model::{BaggedParams, BoostedParams, LinearParams};
use vmd_core::vad::VadParams;
use vmd_core::FeatureWindow;
use vmd_harness::dataset::{grid_records_from_manifest, stratified_split_indices};
use vmd_harness::grid::{run_grid, FamilyConfig, GridSpec, ModelConfig};
use vmd_harness::synth::load_manifest;

use super::{resolve_backend, CommandOutput, Ctx};
use crate::args::GridArgs;

pub(crate) fn standard_models(seed: u64) -> Vec<ModelConfig> {
    vec![
        ModelConfig {
            name: "boosted-50x2".into(),
            family: FamilyConfig::Boosted(BoostedParams { seed, ..Default::default() }),
        },
        ModelConfig {
            name: "bagged-50".into(),
            family: FamilyConfig::Bagged(BaggedParams { seed, ..Default::default() }),
        },
        ModelConfig {
            name: "linear-c10".into(),
            family: FamilyConfig::Linear(LinearParams::default()),
        },
    ]
}

pub fn run(args: &GridArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let entries = load_manifest(&args.manifest)?;
    let backend = resolve_backend(&args.backend, &ctx.file)?;
    let vad = VadParams::default();
    let spec = GridSpec::standard(standard_models(args.seed));

    let windows: Vec<FeatureWindow> = spec.windows.clone();
    let records = grid_records_from_manifest(&entries, &windows, &vad, &backend)?;
    let labels: Vec<_> = entries.iter().map(|e| e.label).collect();
    let (train_idx, eval_idx) = stratified_split_indices(&labels, args.eval_fraction, args.seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect::<Vec<_>>();
    let report = run_grid(&spec, &pick(&train_idx), &pick(&eval_idx))?;

    let mut human = format!(
        "records {}  train {}  eval {}  configurations {}\n\n",
        entries.len(),
        train_idx.len(),
        eval_idx.len(),
        report.rows.len() + report.failures.len(),
    );
    human.push_str(&report.to_delimited());
    for f in &report.failures {
        let _ = writeln!(
            human,
            "failed\t{}\t{}\t{}\t{}",
            f.model,
            f.window_ms,
            f.feature_set.name(),
            f.error
        );
    }

    let json = json!({
        "v": 1,
        "kind": "grid",
        "manifest": args.manifest.display().to_string(),
        "records": entries.len(),
        "train_records": train_idx.len(),
        "eval_records": eval_idx.len(),
        "seed": args.seed,
        "report": report,
    });
    Ok(CommandOutput { human, json })
}
