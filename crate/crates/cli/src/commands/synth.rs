use serde_json::json;
use vmd_core::model::Decision;
use vmd_harness::synth::{generate_corpus, SynthSpec, MANIFEST_NAME};

use super::{CommandOutput, Ctx};
use crate::args::SynthArgs;
use crate::table;

pub fn run(args: &SynthArgs, _ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let spec = SynthSpec {
        vm_prior: args.vm_prior,
        duration_ms: args.duration_ms,
        seed: args.seed,
        ..Default::default()
    };
    let entries = generate_corpus(&spec, args.count, &args.output_dir)?;
    let vm = entries.iter().filter(|e| e.label == Decision::Vm).count();
    let manifest = args.output_dir.join(MANIFEST_NAME);

    let human = table::keyed(&[
        ("output_dir", args.output_dir.display().to_string()),
        ("manifest", manifest.display().to_string()),
        ("calls", entries.len().to_string()),
        ("vm", vm.to_string()),
        ("nvm", (entries.len() - vm).to_string()),
        ("seed", args.seed.to_string()),
        ("duration_ms", args.duration_ms.to_string()),
    ]);
    let json = json!({
        "v": 1,
        "kind": "synth",
        "output_dir": args.output_dir.display().to_string(),
        "manifest": manifest.display().to_string(),
        "calls": entries.len(),
        "vm": vm,
        "nvm": entries.len() - vm,
        "seed": args.seed,
        "vm_prior": args.vm_prior,
        "duration_ms": args.duration_ms,
    });
    Ok(CommandOutput { human, json })
}
