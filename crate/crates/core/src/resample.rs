//! Fixed 8 kHz -> 16 kHz polyphase upsampler.
//!
//! Kaiser-windowed sinc interpolation with a 64-sample half-width and
//! cutoff at 0.95x the input Nyquist. The input is zero-padded at both
//! ends and the output length is exactly 2x the input length, so
//! downstream windowing arithmetic stays integral. Each polyphase branch
//! is normalized to unit DC gain, which preserves constant signals
//! exactly away from the edges.

use crate::audio::MonoBuffer;
use crate::error::{CoreError, Result};

pub const INPUT_RATE_HZ: u32 = 8000;
pub const OUTPUT_RATE_HZ: u32 = 16000;

/// Filter half-width in input samples.
const HALF_WIDTH: usize = 64;
/// Cutoff relative to the input Nyquist frequency.
const RELATIVE_CUTOFF: f64 = 0.95;
/// Kaiser beta for >90 dB stop-band attenuation.
const KAISER_BETA: f64 = 9.0;

/// Precomputed polyphase filter bank for the fixed 2x ratio.
#[derive(Debug, Clone)]
pub struct Resampler {
    // taps for output phase p: y[2i+p] = sum_m taps[p][m+HALF_WIDTH] * x[i-m]
    even_taps: Vec<f64>,
    odd_taps: Vec<f64>,
}

impl Default for Resampler {
    fn default() -> Self {
        Self::new()
    }
}

impl Resampler {
    pub fn new() -> Self {
        // h(t) = c * sinc(c*t) * kaiser(t/H), t in input-sample units
        let h = |t: f64| -> f64 {
            let x = RELATIVE_CUTOFF * t;
            let core = if x == 0.0 {
                RELATIVE_CUTOFF
            } else {
                RELATIVE_CUTOFF * (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
            };
            core * kaiser(t, HALF_WIDTH as f64, KAISER_BETA)
        };

        let mut even_taps: Vec<f64> = (-(HALF_WIDTH as i64)..=HALF_WIDTH as i64)
            .map(|m| h(m as f64))
            .collect();
        let mut odd_taps: Vec<f64> = (-(HALF_WIDTH as i64)..HALF_WIDTH as i64)
            .map(|m| h(m as f64 + 0.5))
            .collect();

        // Unit DC gain per phase.
        let norm = |taps: &mut Vec<f64>| {
            let sum: f64 = taps.iter().sum();
            for t in taps.iter_mut() {
                *t /= sum;
            }
        };
        norm(&mut even_taps);
        norm(&mut odd_taps);

        Self {
            even_taps,
            odd_taps,
        }
    }

    /// Resample an 8 kHz buffer to 16 kHz. Output length is exactly 2N.
    pub fn resample(&self, input: &MonoBuffer) -> Result<MonoBuffer> {
        if input.sample_rate_hz != INPUT_RATE_HZ {
            return Err(CoreError::Config(format!(
                "resampler expects {INPUT_RATE_HZ} Hz input, got {} Hz",
                input.sample_rate_hz
            )));
        }
        let x = &input.samples;
        let n = x.len();
        let mut out = Vec::with_capacity(2 * n);
        let hw = HALF_WIDTH as i64;

        for i in 0..n as i64 {
            // phase 0 taps span m in [-H, H]; phase 1 taps span [-H, H-1]
            let (even, odd) = if i >= hw && i + hw < n as i64 {
                // Interior: every k = i + H - idx is in range, so the
                // guards drop out. The tap order (and therefore the
                // rounding) matches the edge path exactly.
                let window = &x[(i - hw) as usize..=(i + hw) as usize];
                let mut even = 0.0;
                for (&tap, &xv) in self.even_taps.iter().zip(window.iter().rev()) {
                    even += tap * xv;
                }
                let mut odd = 0.0;
                for (&tap, &xv) in self.odd_taps.iter().zip(window[1..].iter().rev()) {
                    odd += tap * xv;
                }
                (even, odd)
            } else {
                let mut even = 0.0;
                for (idx, &tap) in self.even_taps.iter().enumerate() {
                    let k = i - (idx as i64 - hw);
                    if k >= 0 && k < n as i64 {
                        even += tap * x[k as usize];
                    }
                }
                let mut odd = 0.0;
                for (idx, &tap) in self.odd_taps.iter().enumerate() {
                    let k = i - (idx as i64 - hw);
                    if k >= 0 && k < n as i64 {
                        odd += tap * x[k as usize];
                    }
                }
                (even, odd)
            };
            out.push(even);
            out.push(odd);
        }
        Ok(MonoBuffer::new(out, OUTPUT_RATE_HZ))
    }
}

/// Kaiser window evaluated at t with half-width h.
fn kaiser(t: f64, h: f64, beta: f64) -> f64 {
    let r = t / h;
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).sqrt()) / bessel_i0(beta)
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut k = 1.0;
    loop {
        term *= (half / k) * (half / k);
        sum += term;
        if term < sum * 1e-18 {
            return sum;
        }
        k += 1.0;
    }
}
