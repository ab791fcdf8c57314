use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context};
use serde_json::json;
use vmd_core::audio::read_wav;
use vmd_core::vad::VadParams;
use vmd_harness::dataset::{extract_views, wav_is_mono};
use vmd_harness::pseudo::{pseudo_label, PseudoInput};
use vmd_harness::synth::MANIFEST_HEADER;

use super::{load_saved_model, resolve_backend, resolve_window, CommandOutput, Ctx};
use crate::args::LabelArgs;
use crate::table;

fn wav_paths(dir: &PathBuf) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .wav files in {}", dir.display());
    }
    Ok(paths)
}

pub fn run(args: &LabelArgs, ctx: &Ctx) -> anyhow::Result<CommandOutput> {
    let (model_path, saved) = load_saved_model(&args.model, &ctx.file)?;
    if saved.model.n_features() != 8 {
        bail!(
            "pseudo-labeling needs the 8-feature cross-channel model; {} has {} features",
            model_path.display(),
            saved.model.n_features()
        );
    }
    let window = resolve_window(args.window, &ctx.file, 5000)?;
    let backend = resolve_backend(&args.backend, &ctx.file)?;
    let vad = VadParams::default();
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| args.input_dir.join("pseudo_manifest.csv"));

    let mut inputs = Vec::new();
    for path in wav_paths(&args.input_dir)? {
        let id = path.display().to_string();
        // Mono rule: no agent channel means no cross-channel evidence.
        let cross_channel = if wav_is_mono(&path)? {
            None
        } else {
            let stereo = read_wav(&path)?;
            let views = extract_views(&stereo, &[window], &vad, &backend)?;
            Some(views[&window.window_ms()].cross_channel)
        };
        inputs.push(PseudoInput { id, cross_channel });
    }
    let report = pseudo_label(&saved.model, &inputs)?;
    let exports = report.strong_exports();

    // Manifest paths resolve against the manifest's directory, so
    // rows are written relative to where the file lands.
    let base = output
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), PathBuf::from);
    let base = base.canonicalize().unwrap_or(base);
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    for row in &exports {
        let path = PathBuf::from(&row.id);
        let path = path.canonicalize().unwrap_or(path);
        let path = path.strip_prefix(&base).unwrap_or(&path);
        let _ = writeln!(manifest, "{},{},{},0", path.display(), row.label, row.source);
    }
    fs::write(&output, manifest).with_context(|| format!("writing {}", output.display()))?;

    let c = &report.census;
    let human = table::keyed(&[
        ("input_dir", args.input_dir.display().to_string()),
        ("model", model_path.display().to_string()),
        ("window_ms", window.window_ms().to_string()),
        ("recordings", inputs.len().to_string()),
        ("strong_vm", c.strong_vm.to_string()),
        ("strong_nvm", c.strong_nvm.to_string()),
        ("moderate", c.moderate.to_string()),
        ("uncertain", c.uncertain.to_string()),
        ("exported", exports.len().to_string()),
        ("output", output.display().to_string()),
    ]);
    let json = json!({
        "v": 1,
        "kind": "label",
        "input_dir": args.input_dir.display().to_string(),
        "model_path": model_path.display().to_string(),
        "window_ms": window.window_ms(),
        "recordings": inputs.len(),
        "census": c,
        "exported": exports.len(),
        "output": output.display().to_string(),
        "records": report.records,
    });
    Ok(CommandOutput { human, json })
}
