//! Narrowband telephony audio: WAV and raw PCM decoding, channel
//! splitting, and sample normalization.
//!
//! Telephony recordings arrive as 8 kHz stereo PCM where CH0 (left)
//! carries the callee and CH1 (right) carries the outbound bot. Mono
//! files are treated as callee-only with a silent bot channel.

use std::path::Path;

use crate::error::{CoreError, Result};

/// Divisor used to map i16 samples into [-1.0, 1.0]. Dividing by 32768
/// (not 32767) maps i16::MIN exactly to -1.0; +32767 maps slightly
/// below +1.0.
pub const I16_NORM: f64 = 32768.0;

/// Which channel of a stereo telephony recording a mono buffer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelRole {
    /// CH0 (left): the called party.
    Callee,
    /// CH1 (right): the outbound AI agent.
    Bot,
}

/// Interleaved two-channel signed 16-bit PCM.
#[derive(Debug, Clone)]
pub struct StereoPcm {
    /// L,R,L,R,... interleaved samples. Length is always even.
    pub samples_interleaved: Vec<i16>,
    pub sample_rate_hz: u32,
}

impl StereoPcm {
    pub fn new(samples_interleaved: Vec<i16>, sample_rate_hz: u32) -> Result<Self> {
        if !samples_interleaved.len().is_multiple_of(2) {
            return Err(CoreError::MalformedFrame(format!(
                "interleaved stereo sample count must be even, got {}",
                samples_interleaved.len()
            )));
        }
        if sample_rate_hz == 0 {
            return Err(CoreError::Config("sample rate must be positive".into()));
        }
        Ok(Self {
            samples_interleaved,
            sample_rate_hz,
        })
    }

    /// Number of sample frames (one L+R pair per frame).
    pub fn frame_count(&self) -> usize {
        self.samples_interleaved.len() / 2
    }

    /// Raw i16 samples of a single channel, without normalization.
    pub fn channel_i16(&self, role: ChannelRole) -> Vec<i16> {
        let offset = match role {
            ChannelRole::Callee => 0,
            ChannelRole::Bot => 1,
        };
        self.samples_interleaved
            .iter()
            .skip(offset)
            .step_by(2)
            .copied()
            .collect()
    }
}

/// Mono audio normalized to [-1.0, 1.0].
#[derive(Debug, Clone, PartialEq)]
pub struct MonoBuffer {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl MonoBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn from_i16(samples: &[i16], sample_rate_hz: u32) -> Self {
        Self {
            samples: samples.iter().map(|&s| f64::from(s) / I16_NORM).collect(),
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / f64::from(self.sample_rate_hz)
    }
}

/// Split interleaved stereo into normalized (callee, bot) mono buffers.
///
/// Even indices are CH0 (callee), odd indices are CH1 (bot). The sample
/// rate is preserved.
pub fn split_channels(audio: &StereoPcm) -> (MonoBuffer, MonoBuffer) {
    let rate = audio.sample_rate_hz;
    let callee = MonoBuffer::from_i16(&audio.channel_i16(ChannelRole::Callee), rate);
    let bot = MonoBuffer::from_i16(&audio.channel_i16(ChannelRole::Bot), rate);
    (callee, bot)
}

/// Decode raw little-endian signed 16-bit PCM bytes into samples.
///
/// Errors if the byte count is not a multiple of 2.
pub fn decode_pcm_s16le(bytes: &[u8]) -> Result<Vec<i16>> {
    if !bytes.len().is_multiple_of(2) {
        return Err(CoreError::MalformedFrame(format!(
            "PCM byte count {} is not a multiple of the 2-byte sample size",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect())
}

/// Read a PCM 16-bit WAV file (1 or 2 channels) as stereo.
///
/// Mono files are treated as callee-only: the content becomes CH0 and a
/// silent CH1 of equal length is synthesized.
pub fn read_wav(path: &Path) -> Result<StereoPcm> {
    let reader = hound::WavReader::open(path)
        .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();

    if spec.sample_format != hound::SampleFormat::Int {
        return Err(CoreError::Format(format!(
            "{}: sample_format must be integer PCM, got float",
            path.display()
        )));
    }
    if spec.bits_per_sample != 16 {
        return Err(CoreError::Format(format!(
            "{}: bits_per_sample must be 16, got {}",
            path.display(),
            spec.bits_per_sample
        )));
    }
    if spec.channels == 0 || spec.channels > 2 {
        return Err(CoreError::Format(format!(
            "{}: channels must be 1 or 2, got {}",
            path.display(),
            spec.channels
        )));
    }

    let samples: std::result::Result<Vec<i16>, _> = reader.into_samples::<i16>().collect();
    let samples =
        samples.map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))?;

    let interleaved = if spec.channels == 2 {
        samples
    } else {
        let mut out = Vec::with_capacity(samples.len() * 2);
        for s in samples {
            out.push(s);
            out.push(0);
        }
        out
    };
    StereoPcm::new(interleaved, spec.sample_rate)
}

/// Write interleaved stereo PCM as a 16-bit WAV file.
pub fn write_wav(path: &Path, audio: &StereoPcm) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: audio.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)
        .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))?;
    for &s in &audio.samples_interleaved {
        writer
            .write_sample(s)
            .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))?;
    }
    writer
        .finalize()
        .map_err(|e| CoreError::Format(format!("{}: {e}", path.display())))?;
    Ok(())
}
