//! Deterministic synthetic telephony corpus. Voicemail greetings are
//! rendered as one near-continuous run of envelope-shaped band-limited
//! noise after a short onset delay; live answers as a few sporadic
//! bursts separated by long silences. Spectral realism is out of
//! scope: the reference VAD is energy-based, so shaped noise carries
//! the same information as speech.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vmd_core::audio::write_wav;
use vmd_core::{Decision, StereoPcm};

use crate::error::{HarnessError, Result};
use crate::eval::LabelSource;

pub const CORPUS_RATE_HZ: u32 = 8000;
pub const MANIFEST_NAME: &str = "manifest.csv";
pub const MANIFEST_HEADER: &str = "path,label,source,seed";

/// Inclusive millisecond range; sampled uniformly.
pub type MsRange = (u32, u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    /// P(label = VM) for each generated call.
    pub vm_prior: f64,
    /// Rendered call length. Longer than the largest detection window
    /// so any window can be cut from the front.
    pub duration_ms: u32,
    /// Silence before the greeting starts.
    pub vm_onset_ms: MsRange,
    /// Greeting length; capped to leave a short tail before call end.
    pub vm_greeting_ms: MsRange,
    /// Speech run length between micro-pauses inside the greeting.
    pub vm_phrase_ms: MsRange,
    /// Micro-pause length; must stay under 200 ms to read as one
    /// near-continuous greeting.
    pub vm_micro_pause_ms: MsRange,
    /// Silence before the first live-answer burst.
    pub nvm_onset_ms: MsRange,
    /// Inclusive burst count range for live answers.
    pub nvm_burst_count: (u32, u32),
    pub nvm_burst_ms: MsRange,
    /// Inter-burst silence; at least one second.
    pub nvm_silence_ms: MsRange,
    /// Peak speech amplitude in [-1, 1] terms.
    pub speech_level: f64,
    /// Background noise amplitude.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            vm_prior: 0.5,
            duration_ms: 7000,
            vm_onset_ms: (200, 800),
            vm_greeting_ms: (5200, 6600),
            vm_phrase_ms: (500, 1400),
            vm_micro_pause_ms: (60, 180),
            nvm_onset_ms: (300, 1500),
            nvm_burst_count: (1, 3),
            nvm_burst_ms: (300, 900),
            nvm_silence_ms: (1200, 2600),
            speech_level: 0.35,
            noise_level: 0.002,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let ordered = |name: &str, (lo, hi): MsRange| {
            if lo > hi {
                Err(HarnessError::Input(format!(
                    "{name} range is inverted: {lo}..={hi}"
                )))
            } else {
                Ok(())
            }
        };
        ordered("vm_onset_ms", self.vm_onset_ms)?;
        ordered("vm_greeting_ms", self.vm_greeting_ms)?;
        ordered("vm_phrase_ms", self.vm_phrase_ms)?;
        ordered("vm_micro_pause_ms", self.vm_micro_pause_ms)?;
        ordered("nvm_onset_ms", self.nvm_onset_ms)?;
        ordered("nvm_burst_ms", self.nvm_burst_ms)?;
        ordered("nvm_silence_ms", self.nvm_silence_ms)?;
        if !(0.0..=1.0).contains(&self.vm_prior) {
            return Err(HarnessError::Input(format!(
                "vm_prior must lie in [0, 1], got {}",
                self.vm_prior
            )));
        }
        if self.duration_ms < 1000 {
            return Err(HarnessError::Input(format!(
                "duration_ms must be at least 1000, got {}",
                self.duration_ms
            )));
        }
        if self.vm_micro_pause_ms.1 >= 200 {
            return Err(HarnessError::Input(format!(
                "micro-pauses must stay under 200 ms, got up to {}",
                self.vm_micro_pause_ms.1
            )));
        }
        if self.vm_phrase_ms.0 == 0 {
            return Err(HarnessError::Input("vm_phrase_ms must start above 0".into()));
        }
        if self.nvm_silence_ms.0 < 1000 {
            return Err(HarnessError::Input(format!(
                "live-answer silences must be at least 1000 ms, got {}",
                self.nvm_silence_ms.0
            )));
        }
        if self.nvm_burst_count.0 < 1 || self.nvm_burst_count.0 > self.nvm_burst_count.1 {
            return Err(HarnessError::Input(format!(
                "nvm_burst_count must be an ordered range from at least 1, got {:?}",
                self.nvm_burst_count
            )));
        }
        if self.nvm_burst_ms.0 == 0 {
            return Err(HarnessError::Input("nvm_burst_ms must start above 0".into()));
        }
        if !(self.speech_level > 0.0 && self.speech_level <= 1.0) {
            return Err(HarnessError::Input(format!(
                "speech_level must lie in (0, 1], got {}",
                self.speech_level
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level < self.speech_level) {
            return Err(HarnessError::Input(format!(
                "noise_level must be non-negative and below speech_level, got {}",
                self.noise_level
            )));
        }
        Ok(())
    }
}

/// One generated call with its ground truth and the derived seed that
/// reproduces it.
#[derive(Debug, Clone)]
pub struct SynthCall {
    pub stereo: StereoPcm,
    pub label: Decision,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Decision,
    pub source: LabelSource,
    pub seed: u64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-call seed: a hash of (corpus seed, call index) so calls are
/// independent and the corpus can be generated in any order.
pub fn call_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): MsRange) -> u32 {
    rng.gen_range(lo..=hi)
}

/// Plan speech activity as sorted, disjoint (start_ms, end_ms) spans.
fn plan_vm(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let onset = sample_range(rng, spec.vm_onset_ms);
    let greeting = sample_range(rng, spec.vm_greeting_ms);
    let tail_cap = spec.duration_ms.saturating_sub(100);
    let end_target = (onset + greeting).min(tail_cap);

    let mut spans = Vec::new();
    let mut cursor = onset;
    while cursor < end_target {
        let phrase = sample_range(rng, spec.vm_phrase_ms);
        let end = (cursor + phrase).min(end_target);
        spans.push((cursor, end));
        cursor = end + sample_range(rng, spec.vm_micro_pause_ms);
    }
    spans
}

fn plan_nvm(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<(u32, u32)> {
    let bursts = rng.gen_range(spec.nvm_burst_count.0..=spec.nvm_burst_count.1);
    let mut spans = Vec::new();
    let mut cursor = sample_range(rng, spec.nvm_onset_ms);
    for _ in 0..bursts {
        if cursor >= spec.duration_ms {
            break;
        }
        let burst = sample_range(rng, spec.nvm_burst_ms);
        let end = (cursor + burst).min(spec.duration_ms);
        if end > cursor {
            spans.push((cursor, end));
        }
        cursor = end + sample_range(rng, spec.nvm_silence_ms);
    }
    spans
}

/// Render planned spans as band-limited (one-pole low-passed) noise
/// under a raised-cosine syllabic envelope, over a uniform noise floor.
fn render_callee(spec: &SynthSpec, spans: &[(u32, u32)], rng: &mut ChaCha8Rng) -> Vec<i16> {
    let rate = CORPUS_RATE_HZ as f64;
    let total = spec.duration_ms as usize * (CORPUS_RATE_HZ as usize / 1000);
    let mut samples: Vec<f64> = (0..total)
        .map(|_| rng.gen_range(-1.0..1.0) * spec.noise_level)
        .collect();

    // ~1.2 kHz one-pole low-pass keeps the noise in the speech band.
    let alpha = (-2.0 * std::f64::consts::PI * 1200.0 / rate).exp();
    for &(start_ms, end_ms) in spans {
        let start = start_ms as usize * 8;
        let end = (end_ms as usize * 8).min(total);
        let syllable_hz = rng.gen_range(3.0..5.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let mut lp = 0.0;
        for (i, slot) in samples[start..end].iter_mut().enumerate() {
            let white: f64 = rng.gen_range(-1.0..1.0);
            lp = alpha * lp + (1.0 - alpha) * white;
            let t = i as f64 / rate;
            let cosine = 0.5 - 0.5 * (std::f64::consts::TAU * syllable_hz * t + phase).cos();
            // Envelope floor keeps every in-span chunk above the VAD
            // exit threshold; the greeting must read as continuous.
            let envelope = 0.30 + 0.70 * cosine;
            // 2x restores most of the energy the low-pass removes
            // while keeping peaks inside [-1, 1].
            *slot += spec.speech_level * envelope * lp * 2.0;
        }
    }

    samples
        .into_iter()
        .map(|x| (x.clamp(-1.0, 1.0) * 32767.0).round() as i16)
        .collect()
}

/// Generate call `index` of the corpus described by `spec`. Pure in
/// (spec, index): the same pair always yields identical samples.
pub fn generate_call(spec: &SynthSpec, index: u64) -> Result<SynthCall> {
    spec.validate()?;
    let seed = call_seed(spec.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let label = if rng.gen_bool(spec.vm_prior) {
        Decision::Vm
    } else {
        Decision::Nvm
    };
    let spans = match label {
        Decision::Vm => plan_vm(spec, &mut rng),
        Decision::Nvm => plan_nvm(spec, &mut rng),
    };
    let callee = render_callee(spec, &spans, &mut rng);

    // Bot channel stays silent: the agent is listening while the
    // detector decides.
    let mut interleaved = Vec::with_capacity(callee.len() * 2);
    for s in callee {
        interleaved.push(s);
        interleaved.push(0);
    }
    Ok(SynthCall {
        stereo: StereoPcm::new(interleaved, CORPUS_RATE_HZ)?,
        label,
        seed,
    })
}

/// Write `count` stereo WAV files plus a manifest into `dir`.
/// Re-running with the same spec produces byte-identical files.
pub fn generate_corpus(spec: &SynthSpec, count: usize, dir: &Path) -> Result<Vec<ManifestEntry>> {
    spec.validate()?;
    if count == 0 {
        return Err(HarnessError::Input("corpus size must be at least 1".into()));
    }
    fs::create_dir_all(dir)?;

    let calls: Vec<(SynthCall, PathBuf)> = (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let call = generate_call(spec, index)?;
            let name = PathBuf::from(format!("call_{index:05}.wav"));
            write_wav(&dir.join(&name), &call.stereo)?;
            Ok((call, name))
        })
        .collect::<Result<_>>()?;

    let entries: Vec<ManifestEntry> = calls
        .into_iter()
        .map(|(call, name)| ManifestEntry {
            path: name,
            label: call.label,
            source: LabelSource::Synthetic,
            seed: call.seed,
        })
        .collect();

    let mut body = String::from(MANIFEST_HEADER);
    body.push('\n');
    for e in &entries {
        body.push_str(&format!(
            "{},{},{},{}\n",
            e.path.display(),
            e.label,
            e.source,
            e.seed
        ));
    }
    let mut file = fs::File::create(dir.join(MANIFEST_NAME))?;
    file.write_all(body.as_bytes())?;
    Ok(entries)
}

/// Read a manifest back; relative paths are resolved against the
/// manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Manifest(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == MANIFEST_HEADER => {}
        other => {
            return Err(HarnessError::Manifest(format!(
                "{}: expected header '{MANIFEST_HEADER}', got {:?}",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    let mut entries = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(HarnessError::Manifest(format!(
                "{} line {}: expected 4 fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let label = match fields[1] {
            "VM" => Decision::Vm,
            "NVM" => Decision::Nvm,
            other => {
                return Err(HarnessError::Manifest(format!(
                    "{} line {}: unknown label '{other}'",
                    path.display(),
                    lineno + 2
                )))
            }
        };
        let source = fields[2].parse::<LabelSource>().map_err(|e| {
            HarnessError::Manifest(format!("{} line {}: {e}", path.display(), lineno + 2))
        })?;
        let seed = fields[3].parse::<u64>().map_err(|_| {
            HarnessError::Manifest(format!(
                "{} line {}: bad seed '{}'",
                path.display(),
                lineno + 2,
                fields[3]
            ))
        })?;
        entries.push(ManifestEntry {
            path: base.join(fields[0]),
            label,
            source,
            seed,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests;
