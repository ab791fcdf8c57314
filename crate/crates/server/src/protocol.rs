//! Wire schema, version 1.
//!
//! A session optionally opens with one text frame holding a
//! [`ConfigFrame`]; every frame after that must be binary little-endian
//! signed 16-bit PCM at 8 kHz, interleaved stereo unless mono-callee
//! mode was negotiated. The server answers with exactly one
//! [`ResultMessage`] (or an [`ErrorMessage`]) and then closes.
//!
//! Close codes:
//! - 1000 normal: result delivered, or idle timeout.
//! - 1002 protocol violation: text frame after audio, bad config frame.
//! - 1007 malformed payload: binary frame length not a multiple of the
//!   sample-frame size (4 bytes stereo, 2 bytes mono).
//! - 1011 internal error: inference failed.
//! - 1013 capacity: session table is full, try again later.

use serde::{Deserialize, Serialize};
use vmd_core::features::TemporalFeatureVector;
use vmd_core::model::Decision;
use vmd_core::{CoreError, Result};

pub const PROTOCOL_VERSION: u32 = 1;

pub const CLOSE_NORMAL: u16 = 1000;
pub const CLOSE_PROTOCOL: u16 = 1002;
pub const CLOSE_MALFORMED: u16 = 1007;
pub const CLOSE_INTERNAL: u16 = 1011;
pub const CLOSE_CAPACITY: u16 = 1013;

/// Liveness endpoint body; constant so probes can string-match it.
pub const LIVENESS_TOKEN: &str = "vmd-server/1 ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChannelMode {
    #[default]
    #[serde(rename = "stereo-interleaved")]
    StereoInterleaved,
    #[serde(rename = "mono-callee")]
    MonoCallee,
}

impl ChannelMode {
    /// Bytes in one PCM sample frame: all channels of one sample instant.
    pub fn frame_bytes(self) -> usize {
        match self {
            ChannelMode::StereoInterleaved => 4,
            ChannelMode::MonoCallee => 2,
        }
    }
}

fn default_version() -> u32 {
    PROTOCOL_VERSION
}

/// Optional leading text frame.
///
/// ```json
/// {"v":1,"call_id":"c-42","window_ms":3000,"channel_mode":"mono-callee"}
/// ```
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFrame {
    #[serde(default = "default_version")]
    pub v: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_ms: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel_mode: Option<ChannelMode>,
}

impl ConfigFrame {
    pub fn parse(text: &str) -> Result<Self> {
        let frame: ConfigFrame = serde_json::from_str(text)
            .map_err(|e| CoreError::Protocol(format!("bad config frame: {e}")))?;
        if frame.v != PROTOCOL_VERSION {
            return Err(CoreError::Protocol(format!(
                "unsupported protocol version {}",
                frame.v
            )));
        }
        Ok(frame)
    }
}

/// The one result a session receives.
///
/// ```json
/// {"v":1,"kind":"result","session_id":"s-7","call_id":"c-42",
///  "decision":"VM","probability":0.97,"window_ms":5000,
///  "processing_ms":6.25,"short_input":false,"features":{...}}
/// ```
///
/// `processing_ms` covers resampling through classification only; the
/// window's buffering wait is excluded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultMessage {
    pub v: u32,
    pub kind: String,
    pub session_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_id: Option<String>,
    pub decision: Decision,
    pub probability: f64,
    pub window_ms: u32,
    pub processing_ms: f64,
    pub short_input: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<TemporalFeatureVector>,
}

/// ```json
/// {"v":1,"kind":"error","session_id":"s-7","code":"malformed_frame","message":"..."}
/// ```
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorMessage {
    pub v: u32,
    pub kind: String,
    pub session_id: String,
    pub code: String,
    pub message: String,
}

impl ErrorMessage {
    pub fn new(session_id: &str, code: &str, message: impl Into<String>) -> Self {
        Self {
            v: PROTOCOL_VERSION,
            kind: "error".into(),
            session_id: session_id.into(),
            code: code.into(),
            message: message.into(),
        }
    }
}

/// Decodes one binary PCM frame to callee samples.
///
/// Little-endian s16. Stereo frames carry CH0 (callee) at even sample
/// indices; mono frames are callee already.
pub fn decode_audio_frame(bytes: &[u8], mode: ChannelMode) -> Result<Vec<i16>> {
    let frame_bytes = mode.frame_bytes();
    if !bytes.len().is_multiple_of(frame_bytes) {
        return Err(CoreError::MalformedFrame(format!(
            "binary frame of {} bytes is not a multiple of the {}-byte sample frame",
            bytes.len(),
            frame_bytes
        )));
    }
    let callee = bytes
        .chunks_exact(frame_bytes)
        .map(|frame| i16::from_le_bytes([frame[0], frame[1]]))
        .collect();
    Ok(callee)
}
