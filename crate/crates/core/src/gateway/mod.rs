//! Network boundary: read ingestion, REST resources and the result push
//! channel.

mod broadcast;
mod http;
mod wire;
mod ws;

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::DefaultBodyLimit;
use axum::routing::{delete, get, post};
use axum::Router;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use broadcast::{Broadcaster, ResultHub, ResultMessage, Subscription, RESULT_MESSAGE_TYPE};
pub use http::{ConfigDoc, IngestReport};
pub use wire::{decode_batch, BatchError, Recorder, MAX_BATCH};
pub use ws::MAX_MISSED_PONGS;

use crate::session::{ConfigError, Engine, LogError, ServiceConfig, TrialLog, WireAdapter};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Shared handles behind every route.
#[derive(Clone)]
pub struct AppState {
    pub engine: Engine,
    pub hub: Arc<ResultHub>,
    pub adapter: Arc<WireAdapter>,
    pub heartbeat: Duration,
    pub recorder: Option<Arc<Recorder>>,
}

impl AppState {
    /// Opens the trial log (if configured) and starts the engine.
    pub fn from_config(config: &ServiceConfig, record: Option<&Path>) -> Result<Self, GatewayError> {
        config.validate()?;
        let log = config.server.trial_log.as_ref().map(TrialLog::open).transpose()?;
        let hub = Arc::new(ResultHub::new(log, config.server.subscriber_queue));
        let engine = Engine::new(config, hub.clone())?;
        let recorder = record.map(Recorder::create).transpose()?.map(Arc::new);
        Ok(Self {
            engine,
            hub,
            adapter: Arc::new(config.wire.clone()),
            heartbeat: Duration::from_secs_f64(config.server.heartbeat_s),
            recorder,
        })
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/reads", post(http::post_reads))
        .route("/api/tags", get(http::list_tags).post(http::create_tag))
        .route("/api/tags/{label}", delete(http::delete_tag))
        .route("/api/config", get(http::get_config).put(http::put_config))
        .route("/api/trials", get(http::get_trials))
        .route("/api/stats", get(http::get_stats))
        .route("/ws/results", get(ws::results))
        .layer(DefaultBodyLimit::max(32 * 1024 * 1024))
        .with_state(state)
}

/// A server running on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: AppState,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

pub async fn spawn(state: AppState, listener: TcpListener) -> Result<RunningServer, GatewayError> {
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningServer {
        addr,
        state,
        shutdown: Some(tx),
        task,
    })
}
