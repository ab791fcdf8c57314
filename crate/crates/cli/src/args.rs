use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Voicemail detection toolkit: offline detection, training and
/// evaluation, corpus synthesis, the streaming server, and a load
/// generator.
#[derive(Debug, Parser)]
#[command(name = "vmd", version, max_term_width = 100)]
pub struct Cli {
    /// TOML config file supplying defaults (model, window_ms, tau,
    /// backend, plus [serve] and [loadtest] sections). Explicit flags
    /// win over file values [default: no file]
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Emit one JSON document instead of the human report. The JSON
    /// carries a superset of the human report's fields
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one call recording and print the timing breakdown
    Detect(DetectArgs),
    /// Train a classifier from a labeled manifest and save it
    Train(TrainArgs),
    /// Run the full model x threshold x window x feature-set grid
    Grid(GridArgs),
    /// Evaluate one model across the 14 standard thresholds
    Sweep(SweepArgs),
    /// Generate a synthetic labeled corpus
    Synth(SynthArgs),
    /// Pseudo-label recordings with a cross-channel model
    Label(LabelArgs),
    /// Run the streaming detection server
    Serve(ServeArgs),
    /// Drive a running server with concurrent synthetic calls
    Loadtest(LoadtestArgs),
    /// Measure the per-stage latency of repeated detections
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Boosted,
    Bagged,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureSetArg {
    Vad15,
    Xch8,
    Combined23,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Call recording to classify (mono or stereo WAV, 8 kHz)
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    /// Model file [default: `model` from --config]
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Detection window in ms [default: the model's training window]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// Decision threshold in [0.30, 0.95] [default: 0.50]
    #[arg(long)]
    pub tau: Option<f64>,
    /// VAD backend, `energy:<rms>` or `graph:<path>` [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled manifest (path,label,source,seed)
    #[arg(long, value_name = "CSV")]
    pub manifest: PathBuf,
    /// Where to write the trained model
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,
    /// Classifier family
    #[arg(long, value_enum, default_value_t = FamilyArg::Boosted)]
    pub family: FamilyArg,
    /// Feature view to train on
    #[arg(long, value_enum, default_value_t = FeatureSetArg::Vad15)]
    pub feature_set: FeatureSetArg,
    /// Feature window in ms [default: 5000]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// Threshold for the held-out evaluation [default: 0.50]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Stratified fraction held out for evaluation; 0 trains on
    /// everything and skips the evaluation
    #[arg(long, default_value_t = 0.2)]
    pub eval_fraction: f64,
    /// Seed for the split and for bagged bootstraps
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// VAD backend [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    /// Labeled manifest (path,label,source,seed)
    #[arg(long, value_name = "CSV")]
    pub manifest: PathBuf,
    /// Stratified fraction held out for evaluation
    #[arg(long, default_value_t = 0.2)]
    pub eval_fraction: f64,
    /// Seed for the split and for bagged bootstraps
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// VAD backend [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Labeled manifest (path,label,source,seed)
    #[arg(long, value_name = "CSV")]
    pub manifest: PathBuf,
    /// Model file [default: `model` from --config]
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Feature window in ms [default: the model's training window]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// VAD backend [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for the WAV files and manifest.csv
    #[arg(long, value_name = "DIR")]
    pub output_dir: PathBuf,
    /// Number of calls to generate
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Corpus seed; the same seed reproduces the corpus byte-for-byte
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that a call is a voicemail
    #[arg(long, default_value_t = 0.5)]
    pub vm_prior: f64,
    /// Call length in ms
    #[arg(long, default_value_t = 7000)]
    pub duration_ms: u32,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Directory of WAV recordings to label
    #[arg(long, value_name = "DIR")]
    pub input_dir: PathBuf,
    /// Cross-channel (8-feature) model file [default: `model` from --config]
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Feature window in ms [default: 5000]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// Where to write the STRONG-tier manifest
    /// [default: <input-dir>/pseudo_manifest.csv]
    #[arg(long, value_name = "CSV")]
    pub output: Option<PathBuf>,
    /// VAD backend [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Model file [default: `model` from --config]
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Listen address [default: 127.0.0.1]
    #[arg(long, value_name = "ADDR")]
    pub listen: Option<IpAddr>,
    /// Listen port; 0 picks an ephemeral port [default: 8089]
    #[arg(long)]
    pub port: Option<u16>,
    /// Default detection window in ms [default: 5000]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// Decision threshold [default: 0.50]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Inference worker threads [default: CPU core count]
    #[arg(long, value_name = "N")]
    pub pool_size: Option<usize>,
    /// Concurrent session cap [default: 256]
    #[arg(long, value_name = "N")]
    pub max_sessions: Option<usize>,
    /// Reclaim silent sessions after this long [default: 30000]
    #[arg(long, value_name = "MS")]
    pub idle_timeout_ms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LoadtestArgs {
    /// Server to drive, host:port [default: `loadtest.target` from --config]
    #[arg(long, value_name = "ADDR")]
    pub target: Option<String>,
    /// Concurrent clients (at least 1) [default: 4]
    #[arg(long, value_name = "N")]
    pub concurrency: Option<usize>,
    /// Calls each client completes in sequence [default: 5]
    #[arg(long, value_name = "N")]
    pub calls_per_client: Option<usize>,
    /// Synthetic corpus seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probability that a synthetic call is a voicemail
    #[arg(long, default_value_t = 0.5)]
    pub vm_prior: f64,
    /// Synthetic call length in ms
    #[arg(long, default_value_t = 7000)]
    pub duration_ms: u32,
    /// Gap between 20 ms frames; 20 streams in real time, 0 floods
    /// [default: 20]
    #[arg(long, value_name = "MS")]
    pub frame_interval_ms: Option<u64>,
    /// Stagger client starts across this ramp window [default: 0]
    #[arg(long, value_name = "MS")]
    pub ramp_ms: Option<u64>,
    /// Give up on a call after this long [default: 60]
    #[arg(long, value_name = "S", default_value_t = 60)]
    pub call_timeout_s: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Call recording to measure against (WAV, 8 kHz)
    #[arg(long, value_name = "WAV")]
    pub input: PathBuf,
    /// Model file [default: `model` from --config]
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Repetitions; stage times reported as medians
    #[arg(long, default_value_t = 100)]
    pub repetitions: u32,
    /// Detection window in ms [default: the model's training window]
    #[arg(long, value_name = "MS")]
    pub window: Option<u32>,
    /// Decision threshold [default: 0.50]
    #[arg(long)]
    pub tau: Option<f64>,
    /// VAD backend [default: energy:0.05]
    #[arg(long, value_name = "SPEC")]
    pub backend: Option<String>,
}
