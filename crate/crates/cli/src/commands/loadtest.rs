use std::time::Duration;

use serde_json::json;
use vmd_harness::synth::SynthSpec;

use super::{CommandOutput, Ctx};
use crate::args::LoadtestArgs;
use crate::config_file::{pick, pick_required};
use crate::loadtest::{run_loadtest, LoadtestSpec};
use crate::table;

pub fn run(args: &LoadtestArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let file = &ctx.file.loadtest;
    let spec = LoadtestSpec {
        target: pick_required(args.target.clone(), file.target.clone(), "--target")?,
        concurrency: pick(args.concurrency, file.concurrency, 4),
        calls_per_client: pick(args.calls_per_client, file.calls_per_client, 5),
        synth: SynthSpec {
            vm_prior: args.vm_prior,
            duration_ms: args.duration_ms,
            seed: args.seed,
            ..Default::default()
        },
        frame_interval_ms: pick(args.frame_interval_ms, file.frame_interval_ms, 20),
        ramp_ms: pick(args.ramp_ms, file.ramp_ms, 0),
        call_timeout: Duration::from_secs(args.call_timeout_s),
    };

    let runtime = tokio::runtime::Runtime::new()?;
    let report = runtime.block_on(run_loadtest(&spec))?;

    let human = table::columns(
        &["concurrent", "throughput_calls_s", "p50_wall_s", "p95_wall_s", "accuracy", "failures"],
        &[vec![
            report.concurrency.to_string(),
            format!("{:.2}", report.throughput_calls_per_s),
            format!("{:.2}", report.p50_wall_s),
            format!("{:.2}", report.p95_wall_s),
            format!("{:.1}%", report.accuracy * 100.0),
            report.failures.to_string(),
        ]],
    );
    let json = json!({
        "v": 1,
        "kind": "loadtest",
        "seed": args.seed,
        "vm_prior": args.vm_prior,
        "duration_ms": args.duration_ms,
        "report": report,
    });
    Ok(CommandOutput { human, json })
}
