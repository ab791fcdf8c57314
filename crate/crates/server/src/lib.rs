//! WebSocket detection server: many concurrent call sessions stream
//! 20 ms PCM frames, the window fill triggers one inference on a
//! bounded worker pool, and each session gets exactly one result.

mod config;
mod error;
pub mod protocol;
mod session;
mod stats;
mod workers;

use std::net::SocketAddr;
use std::sync::atomic::AtomicU64;
use std::sync::Arc;

use axum::extract::{State, WebSocketUpgrade};
use axum::response::{IntoResponse, Json};
use axum::routing::get;
use axum::Router;
use tokio::sync::oneshot;
use vmd_core::model::load_model;
use vmd_core::vad::{reference_backend, VadParams};

pub use config::ServerConfig;
pub use error::{Result, ServerError};
pub use session::{CallSession, SessionSettings, SessionStatus};
pub use stats::{LoadReport, StatsCollector};
pub use workers::InferencePool;

pub struct AppState {
    pub(crate) config: ServerConfig,
    pub(crate) pool: InferencePool,
    pub(crate) stats: StatsCollector,
    pub(crate) session_seq: AtomicU64,
}

/// A running server. Dropping the handle leaves the server running
/// detached; call [`ServerHandle::shutdown`] to stop it.
pub struct ServerHandle {
    local_addr: SocketAddr,
    state: Arc<AppState>,
    stop: Option<oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<()>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// The same counters `/stats` serves.
    pub fn load_report(&self) -> LoadReport {
        self.state.stats.report()
    }

    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        let _ = self.task.await;
    }
}

/// Binds, loads the model, and pre-warms the inference pool. Any of
/// those failing aborts startup; after this returns, per-session errors
/// are contained to their session.
pub async fn serve(config: ServerConfig) -> Result<ServerHandle> {
    config.validate()?;
    let model = Arc::new(load_model(&config.model_path)?);
    let pool = InferencePool::new(
        model,
        VadParams::default(),
        reference_backend(),
        config.default_threshold(),
        config.default_window(),
        config.pool_size,
    )?;

    let listener =
        tokio::net::TcpListener::bind(SocketAddr::new(config.listen_addr, config.port)).await?;
    let local_addr = listener.local_addr()?;

    let state = Arc::new(AppState {
        config,
        pool,
        stats: StatsCollector::new(),
        session_seq: AtomicU64::new(1),
    });
    let router = Router::new()
        .route("/healthz", get(healthz))
        .route("/stats", get(stats_route))
        .route("/ws", get(ws_route))
        .with_state(Arc::clone(&state));

    let (stop, stopped) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let served = axum::serve(listener, router)
            .with_graceful_shutdown(async {
                let _ = stopped.await;
            })
            .await;
        if let Err(e) = served {
            tracing::error!("server task exited with error: {e}");
        }
    });
    tracing::info!(%local_addr, "detection server listening");

    Ok(ServerHandle {
        local_addr,
        state,
        stop: Some(stop),
        task,
    })
}

async fn healthz() -> &'static str {
    protocol::LIVENESS_TOKEN
}

async fn stats_route(State(state): State<Arc<AppState>>) -> Json<LoadReport> {
    Json(state.stats.report())
}

async fn ws_route(
    State(state): State<Arc<AppState>>,
    upgrade: WebSocketUpgrade,
) -> impl IntoResponse {
    upgrade.on_upgrade(move |socket| session::handle_socket(state, socket))
}
