use anyhow::Context;
use serde_json::json;
use vmd_core::pipeline::{Detector, PipelineConfig};
use vmd_core::vad::VadParams;

use super::{breakdown_rows, load_saved_model, resolve_backend, resolve_tau, resolve_window, CommandOutput, Ctx};
use crate::args::DetectArgs;
use crate::table;

pub fn run(args: &DetectArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
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
    let mut detector = Detector::new(&config)?;
    let result = detector
        .detect_file(&args.input)
        .with_context(|| format!("detecting {}", args.input.display()))?;

    let t = &result.timings;
    let ms = |us: u64| us as f64 / 1000.0;
    let mut human = table::keyed(&[
        ("input", args.input.display().to_string()),
        ("model", format!("{} ({})", result.model, model_path.display())),
        ("window_ms", result.window_ms.to_string()),
        ("tau", format!("{:.2}", tau.tau())),
        ("decision", result.decision.to_string()),
        ("probability", format!("{:.6}", result.probability)),
        ("short_input", result.short_input.to_string()),
    ]);
    human.push('\n');
    human.push_str(&table::columns(
        &["component", "time_ms"],
        &breakdown_rows(
            ms(t.resample_us),
            ms(t.vad_us),
            ms(t.features_us),
            ms(t.classify_us),
            ms(t.total_us),
            result.window_ms,
        ),
    ));

    let json = json!({
        "v": 1,
        "kind": "detect",
        "input": args.input.display().to_string(),
        "model_path": model_path.display().to_string(),
        "model": result.model,
        "window_ms": result.window_ms,
        "tau": tau.tau(),
        "decision": result.decision,
        "probability": result.probability,
        "short_input": result.short_input,
        "timings_us": t,
        "total_processing_ms": ms(t.total_us),
        "time_to_decision_ms": result.window_ms as f64 + ms(t.total_us),
        "features": result.features,
    });
    Ok(CommandOutput { human, json })
}
