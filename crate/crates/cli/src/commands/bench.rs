use anyhow::Context;
use serde_json::json;
use vmd_core::pipeline::{measure_breakdown, PipelineConfig};
use vmd_core::vad::VadParams;

use super::{breakdown_rows, load_saved_model, resolve_backend, resolve_tau, resolve_window, CommandOutput, Ctx};
use crate::args::BenchArgs;
use crate::table;

pub fn run(args: &BenchArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let (model_path, model) = load_saved_model(&args.model, &ctx.file)?;
    let window = resolve_window(args.window, &ctx.file, model.window_ms)?;
    let tau = resolve_tau(args.tau, &ctx.file)?;
    let backend = resolve_backend(&args.backend, &ctx.file)?;
    let config = PipelineConfig {
        window,
        tau,
        vad: VadParams::default(),
        model,
        backend,
    };
    let report = measure_breakdown(&args.input, &config, args.repetitions)
        .with_context(|| format!("benchmarking {}", args.input.display()))?;

    let mut human = table::keyed(&[
        ("input", args.input.display().to_string()),
        ("model", model_path.display().to_string()),
        ("window_ms", window.window_ms().to_string()),
        ("repetitions", report.repetitions.to_string()),
    ]);
    human.push('\n');
    human.push_str(&table::columns(
        &["component", "median_ms"],
        &breakdown_rows(
            report.resample_ms,
            report.vad_ms,
            report.features_ms,
            report.classify_ms,
            report.total_ms,
            window.window_ms(),
        ),
    ));

    let json = json!({
        "v": 1,
        "kind": "bench",
        "input": args.input.display().to_string(),
        "model_path": model_path.display().to_string(),
        "window_ms": window.window_ms(),
        "report": report,
        "time_to_decision_ms": window.window_ms() as f64 + report.total_ms,
    });
    Ok(CommandOutput { human, json })
}
