//! End-to-end server tests over real sockets: liveness, stats, the
//! session protocol, error paths, admission control, and bit-for-bit
//! agreement with offline detection.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

use vmd_core::audio::{write_wav, ChannelRole, StereoPcm};
use vmd_core::model::{
    load_model, save_model, train_boosted, BoostedParams, Decision, Model, ModelMetadata,
    SavedModel,
};
use vmd_core::vad::{reference_backend, VadParams};
use vmd_core::{Detector, FeatureWindow, PipelineConfig};
use vmd_harness::dataset::{grid_records_from_calls, labeled_records, training_vectors};
use vmd_harness::eval::LabelSource;
use vmd_harness::grid::FeatureSet;
use vmd_harness::synth::{generate_call, SynthSpec};
use vmd_server::protocol::{
    ErrorMessage, ResultMessage, CLOSE_CAPACITY, CLOSE_MALFORMED, CLOSE_NORMAL, CLOSE_PROTOCOL,
    LIVENESS_TOKEN,
};
use vmd_server::{serve, LoadReport, ServerConfig, ServerHandle};

type WsClient = WebSocketStream<MaybeTlsStream<TcpStream>>;

const FRAME_INSTANTS: usize = 160; // 20 ms at 8 kHz

fn model_file() -> &'static Path {
    static FILE: OnceLock<PathBuf> = OnceLock::new();
    FILE.get_or_init(|| {
        let spec = SynthSpec::default();
        let calls: Vec<(String, StereoPcm, Decision)> = (0..80)
            .map(|i| {
                let call = generate_call(&spec, i).unwrap();
                (format!("t-{i}"), call.stereo, call.label)
            })
            .collect();
        let window = FeatureWindow::new(5000).unwrap();
        let records = grid_records_from_calls(
            &calls,
            &[window],
            &VadParams::default(),
            &reference_backend(),
        )
        .unwrap();
        let labeled =
            labeled_records(&records, window, FeatureSet::Vad15, LabelSource::Synthetic).unwrap();
        let model = train_boosted(&training_vectors(&labeled), &BoostedParams::default()).unwrap();
        let saved = SavedModel::new(
            Model::Boosted(model),
            vmd_core::features::FEATURE_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            5000,
            ModelMetadata::default(),
        )
        .unwrap();
        let path = std::env::temp_dir().join(format!("vmd-server-test-{}.json", std::process::id()));
        save_model(&saved, &path).unwrap();
        path
    })
}

async fn start(mutate: impl FnOnce(&mut ServerConfig)) -> ServerHandle {
    let mut config = ServerConfig::new(model_file().to_path_buf());
    config.port = 0;
    config.pool_size = 2;
    mutate(&mut config);
    serve(config).await.unwrap()
}

async fn ws_connect(addr: SocketAddr) -> WsClient {
    let (client, _) = connect_async(format!("ws://{addr}/ws")).await.unwrap();
    client
}

async fn http_get(addr: SocketAddr, path: &str) -> (u16, String) {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    let request = format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n");
    stream.write_all(request.as_bytes()).await.unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).await.unwrap();
    let text = String::from_utf8(raw).unwrap();
    let (head, body) = text.split_once("\r\n\r\n").unwrap();
    let status: u16 = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    (status, body.to_string())
}

async fn stats(addr: SocketAddr) -> LoadReport {
    let (status, body) = http_get(addr, "/stats").await;
    assert_eq!(status, 200);
    serde_json::from_str(&body).unwrap()
}

/// Stereo 20 ms wire frames (640 bytes) for the first `count` frames.
fn stereo_frames(stereo: &StereoPcm, count: usize) -> Vec<Vec<u8>> {
    stereo
        .samples_interleaved
        .chunks(FRAME_INSTANTS * 2)
        .take(count)
        .map(|chunk| chunk.iter().flat_map(|s| s.to_le_bytes()).collect())
        .collect()
}

fn mono_frames(callee: &[i16], count: usize) -> Vec<Vec<u8>> {
    callee
        .chunks(FRAME_INSTANTS)
        .take(count)
        .map(|chunk| chunk.iter().flat_map(|s| s.to_le_bytes()).collect())
        .collect()
}

/// Offline reference run on the same audio the stream carries.
fn offline_result(window_ms: u32, wav: &Path) -> vmd_core::DetectionResult {
    let model = Arc::new(load_model(model_file()).unwrap());
    let config = PipelineConfig {
        window: FeatureWindow::new(window_ms).unwrap(),
        tau: Default::default(),
        vad: VadParams::default(),
        model,
        backend: reference_backend(),
    };
    Detector::new(&config).unwrap().detect_file(wav).unwrap()
}

async fn next_message(client: &mut WsClient) -> Message {
    tokio::time::timeout(Duration::from_secs(10), client.next())
        .await
        .expect("server answered within 10 s")
        .expect("connection still open")
        .unwrap()
}

async fn expect_result(client: &mut WsClient) -> ResultMessage {
    match next_message(client).await {
        Message::Text(text) => serde_json::from_str(&text).unwrap(),
        other => panic!("expected a result message, got {other:?}"),
    }
}

async fn expect_error(client: &mut WsClient) -> ErrorMessage {
    match next_message(client).await {
        Message::Text(text) => serde_json::from_str(&text).unwrap(),
        other => panic!("expected an error message, got {other:?}"),
    }
}

async fn expect_close(client: &mut WsClient, code: u16) {
    match next_message(client).await {
        Message::Close(Some(frame)) => assert_eq!(u16::from(frame.code), code),
        other => panic!("expected close {code}, got {other:?}"),
    }
}

async fn assert_silent(client: &mut WsClient) {
    let poll = tokio::time::timeout(Duration::from_millis(100), client.next()).await;
    assert!(poll.is_err(), "server spoke before the window filled");
}

async fn wait_for<F: Fn(&LoadReport) -> bool>(addr: SocketAddr, what: &str, pred: F) -> LoadReport {
    for _ in 0..100 {
        let report = stats(addr).await;
        if pred(&report) {
            return report;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    panic!("stats never reached: {what}");
}

#[tokio::test]
async fn liveness_and_fresh_stats() {
    let server = start(|_| {}).await;
    let addr = server.local_addr();

    let (status, body) = http_get(addr, "/healthz").await;
    assert_eq!(status, 200);
    assert_eq!(body, LIVENESS_TOKEN);

    let report = stats(addr).await;
    assert_eq!(report.sessions_total, 0);
    assert_eq!(report.sessions_active, 0);
    assert_eq!(report.decisions_vm, 0);
    assert_eq!(report.decisions_nvm, 0);
    assert_eq!(report.failures, 0);
    assert_eq!(report.p50_processing_ms, 0.0);
    assert_eq!(report.p95_processing_ms, 0.0);
    assert_eq!(report.throughput_per_s, 0.0);

    server.shutdown().await;
}

#[tokio::test]
async fn startup_fails_fast() {
    let mut config = ServerConfig::new(PathBuf::from("/nonexistent/model.json"));
    config.port = 0;
    assert!(serve(config).await.is_err());

    let mut config = ServerConfig::new(model_file().to_path_buf());
    config.port = 0;
    config.pool_size = 0;
    assert!(serve(config).await.is_err());
}

#[tokio::test]
async fn streamed_result_matches_offline_bit_for_bit() {
    let call = generate_call(&SynthSpec::default(), 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("call.wav");
    write_wav(&wav, &call.stereo).unwrap();
    let expected = offline_result(5000, &wav);

    let server = start(|_| {}).await;
    let mut client = ws_connect(server.local_addr()).await;

    let frames = stereo_frames(&call.stereo, 250);
    assert_eq!(frames.len(), 250);
    assert!(frames.iter().all(|f| f.len() == 640));
    for frame in &frames[..249] {
        client.send(Message::Binary(frame.clone())).await.unwrap();
    }
    assert_silent(&mut client).await;

    client
        .send(Message::Binary(frames[249].clone()))
        .await
        .unwrap();
    let result = expect_result(&mut client).await;
    expect_close(&mut client, CLOSE_NORMAL).await;

    assert_eq!(result.v, 1);
    assert_eq!(result.kind, "result");
    assert!(result.session_id.starts_with("s-"));
    assert_eq!(result.decision, expected.decision);
    assert_eq!(
        result.probability.to_bits(),
        expected.probability.to_bits(),
        "streamed probability must equal the offline run bit-for-bit"
    );
    assert_eq!(result.window_ms, 5000);
    assert!(!result.short_input);
    assert!(result.processing_ms > 0.0);
    let features = result.features.expect("snapshot included");
    assert_eq!(
        features.to_array(),
        expected.features.to_array(),
        "feature snapshot must match the offline extraction"
    );

    server.shutdown().await;
}

#[tokio::test]
async fn config_frame_sets_call_id_window_and_mono_mode() {
    let call = generate_call(&SynthSpec::default(), 11).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("call.wav");
    write_wav(&wav, &call.stereo).unwrap();
    let expected = offline_result(3000, &wav);

    let server = start(|_| {}).await;
    let mut client = ws_connect(server.local_addr()).await;
    client
        .send(Message::Text(
            r#"{"v":1,"call_id":"c-42","window_ms":3000,"channel_mode":"mono-callee"}"#.into(),
        ))
        .await
        .unwrap();

    // 3000 ms / 20 ms = 150 frames decide the call.
    let callee = call.stereo.channel_i16(ChannelRole::Callee);
    let frames = mono_frames(&callee, 150);
    assert!(frames.iter().all(|f| f.len() == 320));
    for frame in &frames[..149] {
        client.send(Message::Binary(frame.clone())).await.unwrap();
    }
    assert_silent(&mut client).await;
    client
        .send(Message::Binary(frames[149].clone()))
        .await
        .unwrap();

    let result = expect_result(&mut client).await;
    expect_close(&mut client, CLOSE_NORMAL).await;
    assert_eq!(result.call_id.as_deref(), Some("c-42"));
    assert_eq!(result.window_ms, 3000);
    assert_eq!(result.probability.to_bits(), expected.probability.to_bits());

    server.shutdown().await;
}

#[tokio::test]
async fn malformed_frame_is_reported_and_counted() {
    let server = start(|_| {}).await;
    let addr = server.local_addr();
    let mut client = ws_connect(addr).await;

    client
        .send(Message::Binary(vec![1, 2, 3]))
        .await
        .unwrap();
    let error = expect_error(&mut client).await;
    assert_eq!(error.kind, "error");
    assert_eq!(error.code, "malformed_frame");
    expect_close(&mut client, CLOSE_MALFORMED).await;

    let report = wait_for(addr, "failure recorded", |r| r.failures == 1).await;
    assert_eq!(report.sessions_total, 1);
    assert_eq!(report.decisions_vm + report.decisions_nvm, 0);

    server.shutdown().await;
}

#[tokio::test]
async fn text_after_audio_is_a_protocol_error() {
    let server = start(|_| {}).await;
    let mut client = ws_connect(server.local_addr()).await;

    client
        .send(Message::Binary(vec![0u8; 640]))
        .await
        .unwrap();
    client
        .send(Message::Text(r#"{"call_id":"late"}"#.into()))
        .await
        .unwrap();

    let error = expect_error(&mut client).await;
    assert_eq!(error.code, "protocol");
    expect_close(&mut client, CLOSE_PROTOCOL).await;

    server.shutdown().await;
}

#[tokio::test]
async fn bad_config_frame_is_a_protocol_error() {
    let server = start(|_| {}).await;
    let mut client = ws_connect(server.local_addr()).await;

    client
        .send(Message::Text(r#"{"window_ms":4000}"#.into()))
        .await
        .unwrap();
    let error = expect_error(&mut client).await;
    assert_eq!(error.code, "bad_config");
    expect_close(&mut client, CLOSE_PROTOCOL).await;

    server.shutdown().await;
}

#[tokio::test]
async fn capacity_overflow_closes_with_1013() {
    let server = start(|c| c.max_sessions = 1).await;
    let addr = server.local_addr();

    let _held = ws_connect(addr).await;
    wait_for(addr, "first session admitted", |r| r.sessions_active == 1).await;

    let mut refused = ws_connect(addr).await;
    expect_close(&mut refused, CLOSE_CAPACITY).await;

    let report = stats(addr).await;
    assert_eq!(report.sessions_total, 1, "refused connections are not sessions");
    assert_eq!(report.failures, 0);

    server.shutdown().await;
}

#[tokio::test]
async fn idle_sessions_are_reclaimed_without_result_or_failure() {
    let server = start(|c| c.idle_timeout_ms = 150).await;
    let addr = server.local_addr();

    let mut client = ws_connect(addr).await;
    expect_close(&mut client, CLOSE_NORMAL).await;

    let report = wait_for(addr, "session reclaimed", |r| r.sessions_active == 0).await;
    assert_eq!(report.sessions_total, 1);
    assert_eq!(report.failures, 0);
    assert_eq!(report.decisions_vm + report.decisions_nvm, 0);

    server.shutdown().await;
}

#[tokio::test]
async fn concurrent_sessions_are_isolated() {
    let spec = SynthSpec::default();
    let call_a = generate_call(&spec, 0).unwrap();
    let call_b = {
        let mut index = 1;
        loop {
            let call = generate_call(&spec, index).unwrap();
            if call.label != call_a.label {
                break call;
            }
            index += 1;
        }
    };

    let dir = tempfile::tempdir().unwrap();
    let wav_a = dir.path().join("a.wav");
    let wav_b = dir.path().join("b.wav");
    write_wav(&wav_a, &call_a.stereo).unwrap();
    write_wav(&wav_b, &call_b.stereo).unwrap();
    let expected_a = offline_result(5000, &wav_a);
    let expected_b = offline_result(5000, &wav_b);
    assert_ne!(expected_a.decision, expected_b.decision);

    let server = start(|_| {}).await;
    let mut client_a = ws_connect(server.local_addr()).await;
    let mut client_b = ws_connect(server.local_addr()).await;

    let frames_a = stereo_frames(&call_a.stereo, 250);
    let frames_b = stereo_frames(&call_b.stereo, 250);
    for (fa, fb) in frames_a.iter().zip(&frames_b) {
        client_a.send(Message::Binary(fa.clone())).await.unwrap();
        client_b.send(Message::Binary(fb.clone())).await.unwrap();
    }

    let result_a = expect_result(&mut client_a).await;
    let result_b = expect_result(&mut client_b).await;
    assert_ne!(result_a.session_id, result_b.session_id);
    assert_eq!(result_a.probability.to_bits(), expected_a.probability.to_bits());
    assert_eq!(result_b.probability.to_bits(), expected_b.probability.to_bits());
    assert_eq!(result_a.decision, expected_a.decision);
    assert_eq!(result_b.decision, expected_b.decision);

    server.shutdown().await;
}

#[tokio::test]
async fn stats_track_a_mixed_workload() {
    let call = generate_call(&SynthSpec::default(), 5).unwrap();
    let server = start(|_| {}).await;
    let addr = server.local_addr();

    let mut client = ws_connect(addr).await;
    for frame in stereo_frames(&call.stereo, 250) {
        client.send(Message::Binary(frame)).await.unwrap();
    }
    let result = expect_result(&mut client).await;
    expect_close(&mut client, CLOSE_NORMAL).await;

    let mut broken = ws_connect(addr).await;
    broken.send(Message::Binary(vec![9; 5])).await.unwrap();
    expect_error(&mut broken).await;
    expect_close(&mut broken, CLOSE_MALFORMED).await;

    let report = wait_for(addr, "both sessions accounted", |r| {
        r.sessions_total == 2 && r.sessions_active == 0
    })
    .await;
    assert_eq!(report.decisions_vm + report.decisions_nvm, 1);
    match result.decision {
        Decision::Vm => assert_eq!(report.decisions_vm, 1),
        Decision::Nvm => assert_eq!(report.decisions_nvm, 1),
    }
    assert_eq!(report.failures, 1);
    assert!(report.p50_processing_ms > 0.0);
    assert!(report.p95_processing_ms >= report.p50_processing_ms);
    assert!(report.throughput_per_s > 0.0);

    // The handle reports the same counters the endpoint serves.
    let direct = server.load_report();
    assert_eq!(direct.sessions_total, 2);
    assert_eq!(direct.failures, 1);

    server.shutdown().await;
}
