use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{CloseFrame, Message, WebSocket};
use vmd_core::{CoreError, FeatureWindow, StreamAccumulator};

use crate::protocol::{
    decode_audio_frame, ChannelMode, ConfigFrame, ErrorMessage, ResultMessage, CLOSE_INTERNAL,
    CLOSE_MALFORMED, CLOSE_NORMAL, CLOSE_PROTOCOL, PROTOCOL_VERSION,
};
use crate::AppState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionStatus {
    Open,
    Deciding,
    Closed,
}

/// Effective per-session settings: server defaults overlaid with the
/// optional leading config frame.
#[derive(Debug, Clone)]
pub struct SessionSettings {
    pub window: FeatureWindow,
    pub channel_mode: ChannelMode,
    pub call_id: Option<String>,
}

/// One call's state. Audio may only be ingested while Open; the window
/// fill moves the session to Deciding and nothing is ingested after.
#[derive(Debug)]
pub struct CallSession {
    pub id: String,
    pub accumulator: StreamAccumulator,
    pub settings: SessionSettings,
    pub created_at: Instant,
    pub status: SessionStatus,
}

impl CallSession {
    pub fn new(id: String, window: FeatureWindow, channel_mode: ChannelMode) -> Self {
        Self {
            id,
            accumulator: StreamAccumulator::new(window),
            settings: SessionSettings {
                window,
                channel_mode,
                call_id: None,
            },
            created_at: Instant::now(),
            status: SessionStatus::Open,
        }
    }

    pub fn audio_started(&self) -> bool {
        self.accumulator.buffered_samples() > 0 || self.accumulator.is_decided()
    }

    /// Applies the leading config frame. Only legal before any audio.
    pub fn apply_config(&mut self, frame: &ConfigFrame) -> vmd_core::Result<()> {
        if self.status != SessionStatus::Open || self.audio_started() {
            return Err(CoreError::Protocol(
                "config frame after audio started".into(),
            ));
        }
        if let Some(ms) = frame.window_ms {
            let window = FeatureWindow::new(ms)?;
            self.settings.window = window;
            self.accumulator = StreamAccumulator::new(window);
        }
        if let Some(mode) = frame.channel_mode {
            self.settings.channel_mode = mode;
        }
        if let Some(call_id) = &frame.call_id {
            self.settings.call_id = Some(call_id.clone());
        }
        Ok(())
    }

    /// Buffers callee samples; returns the full window exactly once and
    /// moves the session to Deciding.
    pub fn ingest(&mut self, callee: &[i16]) -> vmd_core::Result<Option<Vec<i16>>> {
        if self.status != SessionStatus::Open {
            return Err(CoreError::Protocol(
                "audio frame received after the decision was made".into(),
            ));
        }
        match self.accumulator.push(callee)? {
            None => Ok(None),
            Some(window) => {
                let samples = window.to_vec();
                self.status = SessionStatus::Deciding;
                Ok(Some(samples))
            }
        }
    }

    pub fn close(&mut self) {
        self.status = SessionStatus::Closed;
    }
}

enum Outcome {
    /// Result sent; session ran to completion.
    Done,
    /// Client disconnected or errored before the window filled. Not a
    /// server-side failure.
    ClientLeft,
    /// No frame within the idle timeout; session reclaimed.
    Idle,
    /// Protocol, payload, or inference failure.
    Fail {
        code: &'static str,
        close: u16,
        message: String,
    },
}

pub(crate) async fn handle_socket(app: Arc<AppState>, mut ws: WebSocket) {
    if !app.stats.try_admit(app.config.max_sessions) {
        let _ = ws
            .send(Message::Close(Some(CloseFrame {
                code: crate::protocol::CLOSE_CAPACITY,
                reason: "server at capacity".into(),
            })))
            .await;
        return;
    }

    let id = format!("s-{}", app.session_seq.fetch_add(1, std::sync::atomic::Ordering::Relaxed));
    let outcome = drive(&app, &mut ws, &id).await;
    match outcome {
        Outcome::Done => {
            let _ = ws
                .send(Message::Close(Some(CloseFrame {
                    code: CLOSE_NORMAL,
                    reason: "result delivered".into(),
                })))
                .await;
        }
        Outcome::ClientLeft => {}
        Outcome::Idle => {
            tracing::debug!(session = %id, "idle session reclaimed");
            let _ = ws
                .send(Message::Close(Some(CloseFrame {
                    code: CLOSE_NORMAL,
                    reason: "idle timeout".into(),
                })))
                .await;
        }
        Outcome::Fail {
            code,
            close,
            message,
        } => {
            tracing::warn!(session = %id, code, "session failed: {message}");
            app.stats.record_failure();
            let error = ErrorMessage::new(&id, code, message);
            if let Ok(json) = serde_json::to_string(&error) {
                let _ = ws.send(Message::Text(json.into())).await;
            }
            let _ = ws
                .send(Message::Close(Some(CloseFrame {
                    code: close,
                    reason: code.into(),
                })))
                .await;
        }
    }
    app.stats.session_closed();
}

async fn drive(app: &AppState, ws: &mut WebSocket, id: &str) -> Outcome {
    let mut session = CallSession::new(
        id.to_string(),
        app.config.default_window(),
        ChannelMode::default(),
    );
    let idle = Duration::from_millis(app.config.idle_timeout_ms);
    let mut first_frame = true;

    loop {
        let message = match tokio::time::timeout(idle, ws.recv()).await {
            Err(_) => return Outcome::Idle,
            Ok(None) | Ok(Some(Err(_))) => return Outcome::ClientLeft,
            Ok(Some(Ok(message))) => message,
        };
        match message {
            Message::Text(text) => {
                if !first_frame {
                    return Outcome::Fail {
                        code: "protocol",
                        close: CLOSE_PROTOCOL,
                        message: "text frame is only allowed as the first frame".into(),
                    };
                }
                first_frame = false;
                let applied = ConfigFrame::parse(&text).and_then(|f| session.apply_config(&f));
                if let Err(e) = applied {
                    return Outcome::Fail {
                        code: "bad_config",
                        close: CLOSE_PROTOCOL,
                        message: e.to_string(),
                    };
                }
            }
            Message::Binary(bytes) => {
                first_frame = false;
                let callee = match decode_audio_frame(&bytes, session.settings.channel_mode) {
                    Ok(callee) => callee,
                    Err(e) => {
                        return Outcome::Fail {
                            code: "malformed_frame",
                            close: CLOSE_MALFORMED,
                            message: e.to_string(),
                        }
                    }
                };
                let window_samples = match session.ingest(&callee) {
                    Ok(None) => continue,
                    Ok(Some(samples)) => samples,
                    Err(e) => {
                        return Outcome::Fail {
                            code: "protocol",
                            close: CLOSE_PROTOCOL,
                            message: e.to_string(),
                        }
                    }
                };
                return decide(app, ws, &mut session, window_samples).await;
            }
            // The stack answers pings on its own; pongs need no action.
            Message::Ping(_) | Message::Pong(_) => {}
            Message::Close(_) => return Outcome::ClientLeft,
        }
    }
}

async fn decide(
    app: &AppState,
    ws: &mut WebSocket,
    session: &mut CallSession,
    window_samples: Vec<i16>,
) -> Outcome {
    let reply = app.pool.submit(window_samples, session.settings.window);
    let result = match reply.await {
        Err(_) => {
            return Outcome::Fail {
                code: "internal",
                close: CLOSE_INTERNAL,
                message: "inference pool is shutting down".into(),
            }
        }
        Ok(Err(e)) => {
            return Outcome::Fail {
                code: "inference",
                close: CLOSE_INTERNAL,
                message: e.to_string(),
            }
        }
        Ok(Ok(result)) => result,
    };

    app.stats
        .record_decision(result.decision, result.timings.total_us);
    let message = ResultMessage {
        v: PROTOCOL_VERSION,
        kind: "result".into(),
        session_id: session.id.clone(),
        call_id: session.settings.call_id.clone(),
        decision: result.decision,
        probability: result.probability,
        window_ms: result.window_ms,
        processing_ms: result.timings.total_us as f64 / 1000.0,
        short_input: result.short_input,
        features: Some(result.features),
    };
    let json = match serde_json::to_string(&message) {
        Ok(json) => json,
        Err(e) => {
            return Outcome::Fail {
                code: "internal",
                close: CLOSE_INTERNAL,
                message: format!("result serialization failed: {e}"),
            }
        }
    };
    if ws.send(Message::Text(json.into())).await.is_err() {
        return Outcome::ClientLeft;
    }
    session.close();
    Outcome::Done
}
