mod bench;
mod detect;
mod grid;
mod label;
mod loadtest;
mod serve;
mod sweep;
mod synth;
mod train;

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context;
use vmd_core::model::{DecisionThreshold, SavedModel};
use vmd_core::vad::BackendSpec;
use vmd_core::FeatureWindow;

use crate::args::{Cli, Command};
use crate::config_file::{self, pick, pick_required, FileConfig};

/// Every command renders both ways; `--json` picks which one is
/// printed. The JSON document always carries a superset of the fields
/// the human report shows.
pub struct CommandOutput {
    pub human: String,
    pub json: serde_json::Value,
}

pub(crate) struct Ctx {
    pub file: FileConfig,
    pub json: bool,
}

/// Runs the parsed command and returns the text to print.
pub fn execute(cli: Cli) -> anyhow::Result<String> {
    let ctx = Ctx {
        file: config_file::load(cli.config.as_deref())?,
        json: cli.json,
    };
    let output = match &cli.command {
        Command::Detect(args) => detect::run(args, &ctx)?,
        Command::Train(args) => train::run(args, &ctx)?,
        Command::Grid(args) => grid::run(args, &ctx)?,
        Command::Sweep(args) => sweep::run(args, &ctx)?,
        Command::Synth(args) => synth::run(args, &ctx)?,
        Command::Label(args) => label::run(args, &ctx)?,
        // serve prints its own startup line and blocks until ctrl-c.
        Command::Serve(args) => return serve::run(args, &ctx),
        Command::Loadtest(args) => loadtest::run(args, &ctx)?,
        Command::Bench(args) => bench::run(args, &ctx)?,
    };
    Ok(if ctx.json {
        let mut text = serde_json::to_string_pretty(&output.json)?;
        text.push('\n');
        text
    } else {
        output.human
    })
}

pub(crate) fn resolve_model_path(
    flag: &Option<PathBuf>,
    file: &FileConfig,
) -> anyhow::Result<PathBuf> {
    pick_required(flag.clone(), file.model.clone(), "--model")
}

pub(crate) fn load_saved_model(
    flag: &Option<PathBuf>,
    file: &FileConfig,
) -> anyhow::Result<(PathBuf, Arc<SavedModel>)> {
    let path = resolve_model_path(flag, file)?;
    let saved = vmd_core::model::load_model(&path)
        .with_context(|| format!("loading model {}", path.display()))?;
    Ok((path, Arc::new(saved)))
}

pub(crate) fn resolve_window(
    flag: Option<u32>,
    file: &FileConfig,
    fallback_ms: u32,
) -> anyhow::Result<FeatureWindow> {
    Ok(FeatureWindow::new(pick(flag, file.window_ms, fallback_ms))?)
}

pub(crate) fn resolve_tau(flag: Option<f64>, file: &FileConfig) -> anyhow::Result<DecisionThreshold> {
    Ok(DecisionThreshold::new(pick(
        flag,
        file.tau,
        DecisionThreshold::default().tau(),
    ))?)
}

pub(crate) fn resolve_backend(
    flag: &Option<String>,
    file: &FileConfig,
) -> anyhow::Result<BackendSpec> {
    let spec = pick(
        flag.clone(),
        file.backend.clone(),
        format!("energy:{}", vmd_core::vad::REFERENCE_RMS_THRESHOLD),
    );
    Ok(BackendSpec::parse(&spec)?)
}

/// The latency-breakdown rows both `detect` and `bench` print:
/// per-stage processing plus the window wait that dominates
/// time-to-decision.
pub(crate) fn breakdown_rows(
    resample_ms: f64,
    vad_ms: f64,
    features_ms: f64,
    classify_ms: f64,
    total_ms: f64,
    window_ms: u32,
) -> Vec<Vec<String>> {
    let ms = |v: f64| format!("{v:.3}");
    vec![
        vec!["resample_8k_to_16k".into(), ms(resample_ms)],
        vec!["vad_inference".into(), ms(vad_ms)],
        vec!["feature_extraction".into(), ms(features_ms)],
        vec!["classifier_prediction".into(), ms(classify_ms)],
        vec!["total_processing".into(), ms(total_ms)],
        vec![
            "time_to_decision".into(),
            ms(window_ms as f64 + total_ms),
        ],
    ]
}
