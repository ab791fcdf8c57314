//! Temporal feature extraction: the 15-dimensional speech-activity
//! vector computed from a segment list and detection window, plus the
//! 8-dimensional cross-channel energy set used for pseudo-labeling.
//!
//! All times are milliseconds held in f64; integer segment boundaries
//! keep the arithmetic exact. `total_speech_ms` is the primary quantity
//! and `speech_ratio` is derived from it (`total / W`), so the pair is
//! consistent by construction.

use serde::{Deserialize, Serialize};

use crate::audio::MonoBuffer;
use crate::error::{CoreError, Result};
use crate::vad::SpeechSegment;

/// Detection window lengths with published accuracy numbers.
pub const STANDARD_WINDOWS_MS: [u32; 3] = [3000, 5000, 7000];

/// Field order of [`TemporalFeatureVector::to_array`]; models persist
/// this list so a loaded file is self-describing.
pub const FEATURE_NAMES: [&str; 15] = [
    "speech_ratio",
    "num_segments",
    "mean_seg_ms",
    "longest_seg_ms",
    "first_onset_ms",
    "first_seg_ms",
    "total_speech_ms",
    "speech_first_half_ratio",
    "last_speech_end_ratio",
    "silence_ratio",
    "max_silence_ms",
    "speech_in_first_10s",
    "std_seg_ms",
    "short_seg_count",
    "long_seg_count",
];

/// Field order of [`CrossChannelFeatureVector::to_array`].
pub const CROSS_CHANNEL_FEATURE_NAMES: [&str; 8] = [
    "callee_speech_ratio",
    "bot_speech_ratio",
    "callee_rms",
    "bot_rms",
    "energy_ratio",
    "callee_num_segments",
    "bot_num_segments",
    "bot_silence_indicator",
];

const SHORT_SEG_LIMIT_MS: u32 = 300;
const LONG_SEG_LIMIT_MS: u32 = 1000;
const FIRST_10S_MS: u32 = 10_000;
const ENERGY_EPSILON: f64 = 1e-6;

/// Bot channel below this speech ratio counts as silent.
pub const BOT_SILENCE_SPEECH_RATIO: f64 = 0.02;

/// Detection window length in milliseconds, one of
/// [`STANDARD_WINDOWS_MS`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureWindow {
    window_ms: u32,
}

impl FeatureWindow {
    pub fn new(window_ms: u32) -> Result<Self> {
        if !STANDARD_WINDOWS_MS.contains(&window_ms) {
            return Err(CoreError::Config(format!(
                "window_ms must be one of {STANDARD_WINDOWS_MS:?}, got {window_ms}"
            )));
        }
        Ok(Self { window_ms })
    }

    pub fn window_ms(&self) -> u32 {
        self.window_ms
    }

    /// Callee samples needed at the 8 kHz telephony rate.
    pub fn samples_at_8khz(&self) -> usize {
        self.window_ms as usize * 8
    }
}

impl Default for FeatureWindow {
    fn default() -> Self {
        Self { window_ms: 5000 }
    }
}

/// The 15 temporal speech-activity features, field order 1-15.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalFeatureVector {
    pub speech_ratio: f64,
    pub num_segments: u32,
    pub mean_seg_ms: f64,
    pub longest_seg_ms: f64,
    pub first_onset_ms: f64,
    pub first_seg_ms: f64,
    pub total_speech_ms: f64,
    pub speech_first_half_ratio: f64,
    pub last_speech_end_ratio: f64,
    pub silence_ratio: f64,
    pub max_silence_ms: f64,
    pub speech_in_first_10s: bool,
    pub std_seg_ms: f64,
    pub short_seg_count: u32,
    pub long_seg_count: u32,
}

impl TemporalFeatureVector {
    /// Flatten to the classifier input layout (counts and the binary
    /// indicator widen to f64).
    pub fn to_array(&self) -> [f64; 15] {
        [
            self.speech_ratio,
            self.num_segments as f64,
            self.mean_seg_ms,
            self.longest_seg_ms,
            self.first_onset_ms,
            self.first_seg_ms,
            self.total_speech_ms,
            self.speech_first_half_ratio,
            self.last_speech_end_ratio,
            self.silence_ratio,
            self.max_silence_ms,
            if self.speech_in_first_10s { 1.0 } else { 0.0 },
            self.std_seg_ms,
            self.short_seg_count as f64,
            self.long_seg_count as f64,
        ]
    }
}

/// The 8 cross-channel energy features. Used only by the pseudo-labeler;
/// the real-time path never sees the bot channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossChannelFeatureVector {
    pub callee_speech_ratio: f64,
    pub bot_speech_ratio: f64,
    pub callee_rms: f64,
    pub bot_rms: f64,
    pub energy_ratio: f64,
    pub callee_num_segments: u32,
    pub bot_num_segments: u32,
    pub bot_silence_indicator: bool,
}

impl CrossChannelFeatureVector {
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.callee_speech_ratio,
            self.bot_speech_ratio,
            self.callee_rms,
            self.bot_rms,
            self.energy_ratio,
            self.callee_num_segments as f64,
            self.bot_num_segments as f64,
            if self.bot_silence_indicator { 1.0 } else { 0.0 },
        ]
    }
}

/// Intersect a sorted, non-overlapping segment list with [0, W]. VAD
/// padding can push segments past the window edge; feature equations
/// assume they stay inside it.
pub fn clip_segments(segments: &[SpeechSegment], window: FeatureWindow) -> Vec<SpeechSegment> {
    let w = window.window_ms();
    segments
        .iter()
        .filter(|s| s.start_ms < w)
        .map(|s| SpeechSegment {
            start_ms: s.start_ms,
            end_ms: s.end_ms.min(w),
        })
        .filter(|s| s.start_ms < s.end_ms)
        .collect()
}

/// Compute all 15 features. Segments must be clipped to [0, W], sorted,
/// and non-overlapping; `clip_segments` establishes the first condition.
pub fn extract_features(
    segments: &[SpeechSegment],
    window: FeatureWindow,
) -> TemporalFeatureVector {
    debug_assert!(segments.windows(2).all(|w| w[0].end_ms <= w[1].start_ms));
    debug_assert!(segments.iter().all(|s| s.end_ms <= window.window_ms()));

    let w = window.window_ms() as f64;
    let n = segments.len();

    if n == 0 {
        return TemporalFeatureVector {
            speech_ratio: 0.0,
            num_segments: 0,
            mean_seg_ms: 0.0,
            longest_seg_ms: 0.0,
            first_onset_ms: w,
            first_seg_ms: 0.0,
            total_speech_ms: 0.0,
            speech_first_half_ratio: 0.0,
            last_speech_end_ratio: 0.0,
            silence_ratio: 1.0,
            max_silence_ms: w,
            speech_in_first_10s: false,
            std_seg_ms: 0.0,
            short_seg_count: 0,
            long_seg_count: 0,
        };
    }

    let durations: Vec<f64> = segments.iter().map(|s| s.duration_ms() as f64).collect();
    let total_speech_ms: f64 = durations.iter().sum();
    let speech_ratio = total_speech_ms / w;
    let mean = total_speech_ms / n as f64;

    let half = window.window_ms() / 2;
    // exact interval intersection with [0, W/2]; a straddling segment
    // contributes exactly its part before the midpoint
    let speech_first_half: u32 = segments
        .iter()
        .map(|s| s.end_ms.min(half).saturating_sub(s.start_ms.min(half)))
        .sum();

    let first = segments[0];
    let last = segments[n - 1];

    let mut max_silence = first.start_ms.max(window.window_ms() - last.end_ms);
    for pair in segments.windows(2) {
        max_silence = max_silence.max(pair[1].start_ms - pair[0].end_ms);
    }

    let variance = if n <= 1 {
        0.0
    } else {
        durations.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n as f64
    };

    TemporalFeatureVector {
        speech_ratio,
        num_segments: n as u32,
        mean_seg_ms: mean,
        longest_seg_ms: durations.iter().fold(0.0, |m, &d| m.max(d)),
        first_onset_ms: first.start_ms as f64,
        first_seg_ms: first.duration_ms() as f64,
        total_speech_ms,
        speech_first_half_ratio: speech_first_half as f64 / total_speech_ms,
        last_speech_end_ratio: last.end_ms as f64 / w,
        silence_ratio: 1.0 - speech_ratio,
        max_silence_ms: max_silence as f64,
        speech_in_first_10s: segments.iter().any(|s| s.start_ms < FIRST_10S_MS),
        std_seg_ms: variance.sqrt(),
        short_seg_count: segments
            .iter()
            .filter(|s| s.duration_ms() < SHORT_SEG_LIMIT_MS)
            .count() as u32,
        long_seg_count: segments
            .iter()
            .filter(|s| s.duration_ms() > LONG_SEG_LIMIT_MS)
            .count() as u32,
    }
}

/// Compute the 8 cross-channel features from both channels' segment
/// lists and raw audio. Buffers must have equal length and rate.
pub fn extract_cross_channel(
    callee_segments: &[SpeechSegment],
    bot_segments: &[SpeechSegment],
    callee_audio: &MonoBuffer,
    bot_audio: &MonoBuffer,
    window: FeatureWindow,
) -> Result<CrossChannelFeatureVector> {
    if callee_audio.len() != bot_audio.len()
        || callee_audio.sample_rate_hz != bot_audio.sample_rate_hz
    {
        return Err(CoreError::Input(format!(
            "channel buffers disagree: callee {} samples @ {} Hz, bot {} samples @ {} Hz",
            callee_audio.len(),
            callee_audio.sample_rate_hz,
            bot_audio.len(),
            bot_audio.sample_rate_hz
        )));
    }

    let w = window.window_ms() as f64;
    let speech_ms =
        |segs: &[SpeechSegment]| segs.iter().map(|s| s.duration_ms() as f64).sum::<f64>();
    let rms = |audio: &MonoBuffer| {
        if audio.samples.is_empty() {
            0.0
        } else {
            (audio.samples.iter().map(|s| s * s).sum::<f64>() / audio.samples.len() as f64).sqrt()
        }
    };

    let callee_speech_ratio = speech_ms(callee_segments) / w;
    let bot_speech_ratio = speech_ms(bot_segments) / w;
    let callee_rms = rms(callee_audio);
    let bot_rms = rms(bot_audio);

    Ok(CrossChannelFeatureVector {
        callee_speech_ratio,
        bot_speech_ratio,
        callee_rms,
        bot_rms,
        energy_ratio: callee_rms / (bot_rms + ENERGY_EPSILON),
        callee_num_segments: callee_segments.len() as u32,
        bot_num_segments: bot_segments.len() as u32,
        bot_silence_indicator: bot_speech_ratio < BOT_SILENCE_SPEECH_RATIO,
    })
}
