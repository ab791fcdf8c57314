//! End-to-end detector: buffer callee audio to the detection window,
//! then resample, segment, featurize, and classify, with per-stage
//! timings. The offline (file) and incremental (stream) entry points
//! share one code path, so their probabilities agree bit-for-bit.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, ChannelRole, MonoBuffer, StereoPcm};
use crate::error::{CoreError, Result};
use crate::features::{
    clip_segments, extract_cross_channel, extract_features, CrossChannelFeatureVector,
    FeatureWindow, TemporalFeatureVector,
};
use crate::model::{classify, predict_proba, Decision, DecisionThreshold, SavedModel};
use crate::resample::{Resampler, INPUT_RATE_HZ};
use crate::vad::{
    frame_probabilities, segment, BackendSpec, ProbabilityBackend, SpeechSegment, VadParams,
};

/// Everything needed to build a [`Detector`]. The model is shared;
/// each detector builds its own backend instance from the spec.
#[derive(Clone)]
pub struct PipelineConfig {
    pub window: FeatureWindow,
    pub tau: DecisionThreshold,
    pub vad: VadParams,
    pub model: Arc<SavedModel>,
    pub backend: BackendSpec,
}

impl PipelineConfig {
    /// Defaults around a loaded model: the model's own training window,
    /// tau 0.50, stock VAD parameters.
    pub fn new(model: Arc<SavedModel>, backend: BackendSpec) -> Result<Self> {
        Ok(Self {
            window: FeatureWindow::new(model.window_ms)?,
            tau: DecisionThreshold::default(),
            vad: VadParams::default(),
            model,
            backend,
        })
    }
}

/// Which model produced a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIdentity {
    pub family: String,
    pub n_features: usize,
}

impl std::fmt::Display for ModelIdentity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}f", self.family, self.n_features)
    }
}

/// Per-stage wall time in integer microseconds (monotonic clock).
/// External reports convert to milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub resample_us: u64,
    pub vad_us: u64,
    pub features_us: u64,
    pub classify_us: u64,
    pub total_us: u64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.total_us as f64 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub decision: Decision,
    pub probability: f64,
    pub features: TemporalFeatureVector,
    pub timings: StageTimings,
    pub window_ms: u32,
    pub model: ModelIdentity,
    /// True when the audio ran out before the window and the remainder
    /// was zero-padded.
    pub short_input: bool,
}

/// Buffers callee samples until the detection window is reached.
/// The decision fires exactly once; pushing after that is a protocol
/// violation surfaced to the caller.
#[derive(Debug)]
pub struct StreamAccumulator {
    samples: Vec<i16>,
    target: usize,
    decided: bool,
}

impl StreamAccumulator {
    pub fn new(window: FeatureWindow) -> Self {
        let target = window.samples_at_8khz();
        Self {
            samples: Vec::with_capacity(target),
            target,
            decided: false,
        }
    }

    pub fn is_decided(&self) -> bool {
        self.decided
    }

    pub fn buffered_samples(&self) -> usize {
        self.samples.len()
    }

    /// Buffers one mono 8 kHz frame. Returns the full window exactly once,
    /// on the push that completes it; pushing after that is a protocol error.
    pub fn push(&mut self, frame: &[i16]) -> Result<Option<&[i16]>> {
        if self.decided {
            return Err(CoreError::Protocol(
                "audio frame received after the decision was made".into(),
            ));
        }
        self.samples.extend_from_slice(frame);
        if self.samples.len() < self.target {
            return Ok(None);
        }
        self.decided = true;
        Ok(Some(&self.samples[..self.target]))
    }
}

/// One window's worth of audio taken through resampling, VAD, and
/// featurization, with the stage timings the detector reports.
#[derive(Debug, Clone)]
pub struct WindowExtraction {
    pub segments: Vec<SpeechSegment>,
    pub features: TemporalFeatureVector,
    pub short_input: bool,
    pub resample_us: u64,
    pub vad_us: u64,
    pub features_us: u64,
}

/// The cross-channel view of one stereo call window.
#[derive(Debug, Clone)]
pub struct CrossChannelExtraction {
    pub callee: WindowExtraction,
    pub bot: WindowExtraction,
    pub features: CrossChannelFeatureVector,
}

/// The model-free front half of the pipeline: pad or truncate to the
/// window, resample to 16 kHz, run the VAD backend, and featurize.
/// [`Detector`] runs detection through this same instance, so features
/// computed here match served decisions bit-for-bit.
pub struct FeatureExtractor {
    window: FeatureWindow,
    vad: VadParams,
    backend: Box<dyn ProbabilityBackend>,
    resampler: Resampler,
}

impl FeatureExtractor {
    pub fn new(window: FeatureWindow, vad: VadParams, backend: &BackendSpec) -> Result<Self> {
        vad.validate()?;
        Ok(Self {
            window,
            vad,
            backend: backend.build()?,
            resampler: Resampler::new(),
        })
    }

    pub fn window(&self) -> FeatureWindow {
        self.window
    }

    /// Featurize the first window of raw 8 kHz audio; shortfall is
    /// zero-padded and flagged, excess discarded.
    pub fn extract(&mut self, samples_8k: &[i16]) -> Result<WindowExtraction> {
        let target = self.window.samples_at_8khz();
        let short_input = samples_8k.len() < target;

        let resample_started = Instant::now();
        let mut padded = vec![0i16; target];
        let take = samples_8k.len().min(target);
        padded[..take].copy_from_slice(&samples_8k[..take]);
        let narrowband = MonoBuffer::from_i16(&padded, INPUT_RATE_HZ);
        let wideband = self.resampler.resample(&narrowband)?;
        let resample_us = micros_since(resample_started);

        let vad_started = Instant::now();
        let probs =
            frame_probabilities(self.backend.as_mut(), &wideband, self.vad.chunk_samples)?;
        let raw_segments = segment(&probs, &self.vad, self.vad.chunk_ms());
        let segments = clip_segments(&raw_segments, self.window);
        let vad_us = micros_since(vad_started);

        let features_started = Instant::now();
        let features = extract_features(&segments, self.window);
        let features_us = micros_since(features_started);

        Ok(WindowExtraction {
            segments,
            features,
            short_input,
            resample_us,
            vad_us,
            features_us,
        })
    }

    /// Featurize both channels of a stereo call and derive the
    /// cross-channel vector over the same window.
    pub fn extract_stereo(&mut self, stereo: &StereoPcm) -> Result<CrossChannelExtraction> {
        let target = self.window.samples_at_8khz();
        let callee_raw = stereo.channel_i16(ChannelRole::Callee);
        let bot_raw = stereo.channel_i16(ChannelRole::Bot);
        let callee = self.extract(&callee_raw)?;
        let bot = self.extract(&bot_raw)?;

        let pad_to_window = |raw: &[i16]| {
            let mut padded = vec![0i16; target];
            let take = raw.len().min(target);
            padded[..take].copy_from_slice(&raw[..take]);
            MonoBuffer::from_i16(&padded, INPUT_RATE_HZ)
        };
        let features = extract_cross_channel(
            &callee.segments,
            &bot.segments,
            &pad_to_window(&callee_raw),
            &pad_to_window(&bot_raw),
            self.window,
        )?;

        Ok(CrossChannelExtraction {
            callee,
            bot,
            features,
        })
    }
}

/// A ready-to-run detection pipeline owning one VAD backend instance.
/// Not shareable across calls mid-flight; pools hold several.
pub struct Detector {
    tau: DecisionThreshold,
    model: Arc<SavedModel>,
    extractor: FeatureExtractor,
}

impl Detector {
    pub fn new(config: &PipelineConfig) -> Result<Self> {
        let n = config.model.model.n_features();
        if n != 15 {
            return Err(CoreError::Config(format!(
                "real-time detection computes the 15 temporal features; the {} model takes {n}",
                config.model.model.family_name()
            )));
        }
        Ok(Self {
            tau: config.tau,
            model: Arc::clone(&config.model),
            extractor: FeatureExtractor::new(config.window, config.vad.clone(), &config.backend)?,
        })
    }

    pub fn window(&self) -> FeatureWindow {
        self.extractor.window()
    }

    pub fn model_identity(&self) -> ModelIdentity {
        ModelIdentity {
            family: self.model.model.family_name().to_string(),
            n_features: self.model.model.n_features(),
        }
    }

    /// Run the full pipeline on raw 8 kHz callee samples. Uses the
    /// first window of audio; anything beyond it is discarded, and a
    /// shortfall is zero-padded and flagged.
    pub fn detect_samples(&mut self, callee_8k: &[i16]) -> Result<DetectionResult> {
        let started = Instant::now();
        let extraction = self.extractor.extract(callee_8k)?;

        let classify_started = Instant::now();
        let probability = predict_proba(&self.model.model, &extraction.features.to_array())?;
        let decision = classify(probability, self.tau);
        let classify_us = micros_since(classify_started);

        Ok(DetectionResult {
            decision,
            probability,
            features: extraction.features,
            timings: StageTimings {
                resample_us: extraction.resample_us,
                vad_us: extraction.vad_us,
                features_us: extraction.features_us,
                classify_us,
                total_us: micros_since(started),
            },
            window_ms: self.window().window_ms(),
            model: self.model_identity(),
            short_input: extraction.short_input,
        })
    }

    /// Offline entry point: first window of the file's callee channel.
    pub fn detect_file(&mut self, path: &Path) -> Result<DetectionResult> {
        let audio = read_wav(path)?;
        if audio.sample_rate_hz != INPUT_RATE_HZ {
            return Err(CoreError::Input(format!(
                "{}: expected {INPUT_RATE_HZ} Hz telephony audio, got {} Hz",
                path.display(),
                audio.sample_rate_hz
            )));
        }
        let callee = audio.channel_i16(ChannelRole::Callee);
        self.detect_samples(&callee)
    }

    /// Incremental entry point. Buffers until the window is reached,
    /// then decides exactly once on the first window of audio (excess
    /// in the crossing frame is discarded).
    pub fn push_frames(
        &mut self,
        accumulator: &mut StreamAccumulator,
        frame: &[i16],
    ) -> Result<Option<DetectionResult>> {
        match accumulator.push(frame)? {
            None => Ok(None),
            Some(window) => Ok(Some(self.detect_samples(window)?)),
        }
    }
}

/// Median per-stage timings over repeated runs of one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub repetitions: u32,
    pub resample_ms: f64,
    pub vad_ms: f64,
    pub features_ms: f64,
    pub classify_ms: f64,
    pub total_ms: f64,
}

pub fn measure_breakdown(
    path: &Path,
    config: &PipelineConfig,
    repetitions: u32,
) -> Result<LatencyReport> {
    if repetitions == 0 {
        return Err(CoreError::Config("repetitions must be at least 1".into()));
    }
    let mut detector = Detector::new(config)?;
    let mut stages: [Vec<u64>; 5] = Default::default();
    for _ in 0..repetitions {
        let r = detector.detect_file(path)?;
        stages[0].push(r.timings.resample_us);
        stages[1].push(r.timings.vad_us);
        stages[2].push(r.timings.features_us);
        stages[3].push(r.timings.classify_us);
        stages[4].push(r.timings.total_us);
    }
    let ms = |v: &mut Vec<u64>| median_us(v) / 1000.0;
    Ok(LatencyReport {
        repetitions,
        resample_ms: ms(&mut stages[0]),
        vad_ms: ms(&mut stages[1]),
        features_ms: ms(&mut stages[2]),
        classify_ms: ms(&mut stages[3]),
        total_ms: ms(&mut stages[4]),
    })
}

fn median_us(samples: &mut [u64]) -> f64 {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2] as f64
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) as f64 / 2.0
    }
}

fn micros_since(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}
