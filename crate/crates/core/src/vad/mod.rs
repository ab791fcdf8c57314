//! Voice activity segmentation: per-chunk speech probabilities from a
//! pluggable backend, then a hysteresis state machine with speech
//! padding that yields a sorted, non-overlapping segment list.

mod graph;

pub use graph::{graph_backend, GraphBackend, GraphFile, GraphLayer, GRAPH_FORMAT, GRAPH_VERSION};

use std::path::PathBuf;

use crate::audio::MonoBuffer;
use crate::error::{CoreError, Result};

/// Segmenter parameters. Defaults: enter 0.5, exit 0.35, 30 ms padding,
/// 512-sample chunks (32 ms at 16 kHz).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct VadParams {
    pub enter_threshold: f64,
    pub exit_threshold: f64,
    pub pad_ms: u32,
    pub chunk_samples: usize,
}

impl Default for VadParams {
    fn default() -> Self {
        Self {
            enter_threshold: 0.5,
            exit_threshold: 0.35,
            pad_ms: 30,
            chunk_samples: 512,
        }
    }
}

impl VadParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.enter_threshold > 0.0 && self.enter_threshold <= 1.0) {
            return Err(CoreError::Config(format!(
                "enter_threshold must be in (0,1], got {}",
                self.enter_threshold
            )));
        }
        if !(self.exit_threshold > 0.0 && self.exit_threshold <= 1.0) {
            return Err(CoreError::Config(format!(
                "exit_threshold must be in (0,1], got {}",
                self.exit_threshold
            )));
        }
        if self.exit_threshold > self.enter_threshold {
            return Err(CoreError::Config(format!(
                "exit_threshold {} must not exceed enter_threshold {}",
                self.exit_threshold, self.enter_threshold
            )));
        }
        if self.chunk_samples == 0 {
            return Err(CoreError::Config("chunk_samples must be positive".into()));
        }
        Ok(())
    }

    /// Chunk duration in ms at 16 kHz (512 samples -> 32 ms).
    pub fn chunk_ms(&self) -> u32 {
        (self.chunk_samples * 1000 / 16000) as u32
    }
}

/// One detected speech interval on the call timeline, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SpeechSegment {
    pub start_ms: u32,
    pub end_ms: u32,
}

impl SpeechSegment {
    pub fn new(start_ms: u32, end_ms: u32) -> Self {
        debug_assert!(start_ms < end_ms);
        Self { start_ms, end_ms }
    }

    pub fn duration_ms(&self) -> u32 {
        self.end_ms - self.start_ms
    }
}

/// Source of per-chunk speech probabilities.
///
/// Implementations may hold mutable inference state and are not
/// shareable: callers keep a pool of backends and hand each buffer to
/// exactly one backend at a time.
pub trait ProbabilityBackend: Send {
    /// Identity used in error messages and result metadata.
    fn name(&self) -> &str;

    /// Chunk size the backend was built for, if it is fixed.
    fn expected_chunk_samples(&self) -> Option<usize> {
        None
    }

    /// Clear any recurrent state before a new buffer.
    fn reset(&mut self) {}

    /// Probability of speech in one chunk of exactly `chunk_samples`
    /// samples, in [0, 1].
    fn chunk_probability(&mut self, chunk: &[f64]) -> Result<f64>;
}

/// Run the backend over a 16 kHz buffer, one probability per chunk.
///
/// A trailing partial chunk is zero-padded to the full chunk size and
/// still produces a probability, so terminal speech near the window edge
/// is not dropped.
pub fn frame_probabilities(
    backend: &mut dyn ProbabilityBackend,
    audio: &MonoBuffer,
    chunk_samples: usize,
) -> Result<Vec<f64>> {
    if audio.sample_rate_hz != 16000 {
        return Err(CoreError::Config(format!(
            "VAD requires 16 kHz audio, got {} Hz",
            audio.sample_rate_hz
        )));
    }
    if chunk_samples == 0 {
        return Err(CoreError::Config("chunk_samples must be positive".into()));
    }
    if let Some(expected) = backend.expected_chunk_samples() {
        if expected != chunk_samples {
            return Err(CoreError::Backend {
                backend: backend.name().to_string(),
                message: format!(
                    "backend expects {expected}-sample chunks, segmenter configured for {chunk_samples}"
                ),
            });
        }
    }

    backend.reset();
    let mut probs = Vec::with_capacity(audio.len() / chunk_samples + 1);
    let mut padded = vec![0.0; chunk_samples];
    for chunk in audio.samples.chunks(chunk_samples) {
        let p = if chunk.len() == chunk_samples {
            backend.chunk_probability(chunk)?
        } else {
            padded[..chunk.len()].copy_from_slice(chunk);
            padded[chunk.len()..].fill(0.0);
            backend.chunk_probability(&padded)?
        };
        probs.push(p);
    }
    Ok(probs)
}

/// Hysteresis segmentation of a probability sequence.
///
/// NotSpeech -> Speech when p >= enter_threshold; Speech -> NotSpeech
/// when p < exit_threshold (a probability exactly at the exit threshold
/// stays speech). Each raw run is padded by pad_ms on both sides (start
/// floored at 0), then overlapping or touching segments are merged. An
/// open run at stream end closes at the last chunk boundary.
pub fn segment(probs: &[f64], params: &VadParams, chunk_ms: u32) -> Vec<SpeechSegment> {
    let mut raw: Vec<(u32, u32)> = Vec::new(); // (enter chunk, exit chunk boundary)
    let mut run_start: Option<u32> = None;

    for (i, &p) in probs.iter().enumerate() {
        let i = i as u32;
        match run_start {
            None if p >= params.enter_threshold => run_start = Some(i),
            Some(start) if p < params.exit_threshold => {
                raw.push((start, i));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        raw.push((start, probs.len() as u32));
    }

    let pad = params.pad_ms;
    let padded = raw.iter().map(|&(s, e)| SpeechSegment {
        start_ms: (s * chunk_ms).saturating_sub(pad),
        end_ms: e * chunk_ms + pad,
    });

    let mut merged: Vec<SpeechSegment> = Vec::new();
    for seg in padded {
        match merged.last_mut() {
            Some(last) if seg.start_ms <= last.end_ms => {
                last.end_ms = last.end_ms.max(seg.end_ms);
            }
            _ => merged.push(seg),
        }
    }
    merged
}

/// Deterministic per-chunk RMS backend standing in for a neural VAD in
/// tests and the synthetic harness: p = min(1, chunk_rms / threshold).
#[derive(Debug, Clone)]
pub struct EnergyBackend {
    rms_threshold: f64,
}

/// Build the reference energy backend. The threshold is the chunk RMS
/// that maps to probability 1.0.
pub fn energy_reference_backend(window_rms_threshold: f64) -> Result<EnergyBackend> {
    // NaN must fail this check too.
    if window_rms_threshold.is_nan() || window_rms_threshold <= 0.0 {
        return Err(CoreError::Config(format!(
            "energy backend threshold must be positive, got {window_rms_threshold}"
        )));
    }
    Ok(EnergyBackend {
        rms_threshold: window_rms_threshold,
    })
}

impl ProbabilityBackend for EnergyBackend {
    fn name(&self) -> &str {
        "energy-reference"
    }

    fn chunk_probability(&mut self, chunk: &[f64]) -> Result<f64> {
        Ok((chunk_rms(chunk) / self.rms_threshold).min(1.0))
    }
}

pub(crate) fn chunk_rms(chunk: &[f64]) -> f64 {
    if chunk.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = chunk.iter().map(|s| s * s).sum();
    (sum_sq / chunk.len() as f64).sqrt()
}

/// The reference energy backend's chunk-RMS threshold, full scale.
pub const REFERENCE_RMS_THRESHOLD: f64 = 0.05;

/// The stock probability backend: energy VAD at the reference
/// threshold. Training and serving must agree on this.
pub fn reference_backend() -> BackendSpec {
    BackendSpec::Energy {
        rms_threshold: REFERENCE_RMS_THRESHOLD,
    }
}

/// How to construct a probability backend, parseable from CLI/config
/// strings: `energy:<rms_threshold>` or `graph:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Energy { rms_threshold: f64 },
    Graph { path: PathBuf },
}

impl BackendSpec {
    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("energy", thresh)) => {
                let rms_threshold: f64 = thresh.parse().map_err(|_| {
                    CoreError::Config(format!("invalid energy threshold '{thresh}'"))
                })?;
                if rms_threshold.is_nan() || rms_threshold <= 0.0 {
                    return Err(CoreError::Config(format!(
                        "energy backend threshold must be positive, got {rms_threshold}"
                    )));
                }
                Ok(Self::Energy { rms_threshold })
            }
            Some(("graph", path)) => Ok(Self::Graph {
                path: PathBuf::from(path),
            }),
            _ => Err(CoreError::Config(format!(
                "backend spec '{s}' must be 'energy:<rms_threshold>' or 'graph:<path>'"
            ))),
        }
    }

    /// Instantiate one backend. Graph files are fully validated here, so
    /// failures surface at load time rather than on the audio path.
    pub fn build(&self) -> Result<Box<dyn ProbabilityBackend>> {
        match self {
            Self::Energy { rms_threshold } => {
                Ok(Box::new(energy_reference_backend(*rms_threshold)?))
            }
            Self::Graph { path } => Ok(Box::new(graph_backend(path)?)),
        }
    }
}

impl std::fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Energy { rms_threshold } => write!(f, "energy:{rms_threshold}"),
            Self::Graph { path } => write!(f, "graph:{}", path.display()),
        }
    }
}
