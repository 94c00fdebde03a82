//! Render-and-score HTTP service.
//!
//! `POST /v1/score` takes a JSON [`ScoreRequest`](slidescore_core::api::ScoreRequest),
//! `POST /v1/score/batch` takes NDJSON requests and streams NDJSON results as
//! they complete, `GET /healthz` reports the session pool.

pub mod app;
pub mod config;
pub mod metrics;

use std::net::SocketAddr;
use std::sync::Arc;

use slidescore_gateway::{ChromeFactory, SessionFactory, SessionPool};
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use app::{router, ApiError, AppState};
pub use config::{ConfigError, ServiceConfig};

/// A server running on a background task.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl RunningServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Starts the pool over `factory` and serves on `cfg.addr` (port 0 picks a free one).
pub async fn start(cfg: ServiceConfig, factory: Arc<dyn SessionFactory>) -> anyhow::Result<RunningServer> {
    cfg.validate()?;
    let pool = SessionPool::start(factory, cfg.pool.clone()).await?;
    let listener = TcpListener::bind(cfg.addr).await?;
    let addr = listener.local_addr()?;
    let state = AppState::new(pool, cfg);
    let (tx, rx) = oneshot::channel::<()>();
    let app = router(state.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    tracing::info!(%addr, "slidescore service listening");
    Ok(RunningServer { addr, state, shutdown: Some(tx), task })
}

/// [`start`] with headless Chromium sessions.
pub async fn start_with_chrome(cfg: ServiceConfig) -> anyhow::Result<RunningServer> {
    let factory = ChromeFactory::discover(cfg.settle())?;
    start(cfg, Arc::new(factory)).await
}
