//! Load generator: many concurrent clients stream complete synthetic
//! calls to a running server and the outcomes are rolled up into the
//! throughput / wall-time / accuracy / failure report.

use std::time::{Duration, Instant};

use anyhow::Context;
use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use vmd_core::model::Decision;
use vmd_harness::synth::{generate_call, SynthSpec};
use vmd_server::protocol::ResultMessage;

pub const FRAME_INSTANTS: usize = 160; // 20 ms at 8 kHz

#[derive(Debug, Clone)]
pub struct LoadtestSpec {
    /// host:port of a running server.
    pub target: String,
    pub concurrency: usize,
    pub calls_per_client: usize,
    pub synth: SynthSpec,
    /// 20 streams in real time; 0 floods as fast as the socket takes.
    pub frame_interval_ms: u64,
    /// Client starts are staggered across this window.
    pub ramp_ms: u64,
    pub call_timeout: Duration,
}

impl LoadtestSpec {
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.concurrency < 1 {
            anyhow::bail!("concurrency must be at least 1");
        }
        if self.calls_per_client < 1 {
            anyhow::bail!("calls per client must be at least 1");
        }
        self.synth.validate()?;
        Ok(())
    }
}

/// The Table-11-shaped rollup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadtestReport {
    pub v: u32,
    pub target: String,
    pub concurrency: usize,
    pub calls_offered: usize,
    pub completed: usize,
    pub failures: usize,
    pub throughput_calls_per_s: f64,
    pub p50_wall_s: f64,
    pub p95_wall_s: f64,
    /// Decisions matching the synthetic labels, over completed calls.
    pub accuracy: f64,
    pub elapsed_s: f64,
}

struct CallOutcome {
    wall: Duration,
    correct: bool,
}

pub async fn run_loadtest(spec: &LoadtestSpec) -> anyhow::Result<LoadtestReport> {
    spec.validate()?;
    // Fail immediately when nothing listens there, rather than
    // reporting every call as failed.
    TcpStream::connect(&spec.target)
        .await
        .with_context(|| format!("server unreachable at {}", spec.target))?;

    let started = Instant::now();
    let mut clients = Vec::with_capacity(spec.concurrency);
    for client in 0..spec.concurrency {
        let spec = spec.clone();
        clients.push(tokio::spawn(async move {
            if spec.ramp_ms > 0 {
                let slot = spec.ramp_ms * client as u64 / spec.concurrency as u64;
                tokio::time::sleep(Duration::from_millis(slot)).await;
            }
            let mut outcomes = Vec::with_capacity(spec.calls_per_client);
            for call in 0..spec.calls_per_client {
                let index = (client * spec.calls_per_client + call) as u64;
                outcomes.push(run_one_call(&spec, index).await);
            }
            outcomes
        }));
    }

    let mut walls = Vec::new();
    let mut correct = 0usize;
    let mut failures = 0usize;
    for client in clients {
        for outcome in client.await.expect("client task never panics") {
            match outcome {
                Ok(o) => {
                    walls.push(o.wall);
                    if o.correct {
                        correct += 1;
                    }
                }
                Err(_) => failures += 1,
            }
        }
    }
    let elapsed = started.elapsed();

    walls.sort_unstable();
    let completed = walls.len();
    Ok(LoadtestReport {
        v: 1,
        target: spec.target.clone(),
        concurrency: spec.concurrency,
        calls_offered: spec.concurrency * spec.calls_per_client,
        completed,
        failures,
        throughput_calls_per_s: if completed == 0 {
            0.0
        } else {
            completed as f64 / elapsed.as_secs_f64()
        },
        p50_wall_s: percentile_s(&walls, 0.50),
        p95_wall_s: percentile_s(&walls, 0.95),
        accuracy: if completed == 0 {
            0.0
        } else {
            correct as f64 / completed as f64
        },
        elapsed_s: elapsed.as_secs_f64(),
    })
}

fn percentile_s(sorted: &[Duration], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1].as_secs_f64()
}

/// One complete call: connect, stream stereo frames until the server
/// answers, check the decision against the synthetic label.
async fn run_one_call(spec: &LoadtestSpec, index: u64) -> anyhow::Result<CallOutcome> {
    let call = generate_call(&spec.synth, index)?;
    let frames: Vec<Vec<u8>> = call
        .stereo
        .samples_interleaved
        .chunks(FRAME_INSTANTS * 2)
        .map(|chunk| chunk.iter().flat_map(|s| s.to_le_bytes()).collect())
        .collect();

    let started = Instant::now();
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws", spec.target))
        .await
        .context("websocket connect")?;

    let pace = Duration::from_millis(spec.frame_interval_ms);
    let mut result: Option<ResultMessage> = None;
    for frame in frames {
        if ws.send(Message::Binary(frame)).await.is_err() {
            // Server already hung up; the result may still be queued.
            break;
        }
        // Pacing doubles as the poll for an early result.
        match tokio::time::timeout(pace, ws.next()).await {
            Err(_) => continue,
            Ok(None) => break,
            Ok(Some(Ok(Message::Text(text)))) => {
                result = Some(parse_result(&text)?);
                break;
            }
            Ok(Some(Ok(Message::Close(_)))) => break,
            Ok(Some(Ok(_))) => continue,
            Ok(Some(Err(_))) => break,
        }
    }
    while result.is_none() {
        let message = tokio::time::timeout(spec.call_timeout, ws.next())
            .await
            .context("timed out waiting for the result")?
            .context("connection closed without a result")?
            .context("transport error before the result")?;
        match message {
            Message::Text(text) => result = Some(parse_result(&text)?),
            Message::Close(_) => anyhow::bail!("connection closed without a result"),
            _ => {}
        }
    }
    let wall = started.elapsed();
    let result = result.expect("loop exits only with a result");
    let _ = ws.close(None).await;

    Ok(CallOutcome {
        wall,
        correct: decision_matches(result.decision, call.label),
    })
}

fn parse_result(text: &str) -> anyhow::Result<ResultMessage> {
    let value: serde_json::Value = serde_json::from_str(text).context("unparseable message")?;
    match value.get("kind").and_then(|k| k.as_str()) {
        Some("result") => Ok(serde_json::from_value(value)?),
        Some("error") => anyhow::bail!(
            "server error: {}",
            value.get("message").and_then(|m| m.as_str()).unwrap_or("?")
        ),
        _ => anyhow::bail!("unexpected message kind"),
    }
}

/// True when `decision` agrees with the manifest label; kept as a
/// named helper so the accuracy definition stays in one place.
pub fn decision_matches(decision: Decision, label: Decision) -> bool {
    decision == label
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_use_nearest_rank() {
        let walls: Vec<Duration> = (1..=10).map(Duration::from_secs).collect();
        assert_eq!(percentile_s(&walls, 0.50), 5.0);
        assert_eq!(percentile_s(&walls, 0.95), 10.0);
        assert_eq!(percentile_s(&[], 0.50), 0.0);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let mut spec = LoadtestSpec {
            target: "127.0.0.1:1".into(),
            concurrency: 0,
            calls_per_client: 1,
            synth: SynthSpec::default(),
            frame_interval_ms: 0,
            ramp_ms: 0,
            call_timeout: Duration::from_secs(1),
        };
        assert!(spec.validate().is_err());
        spec.concurrency = 1;
        spec.calls_per_client = 0;
        assert!(spec.validate().is_err());
        spec.calls_per_client = 1;
        spec.validate().unwrap();
    }
}
