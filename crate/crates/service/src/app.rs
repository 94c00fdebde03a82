//! HTTP handlers: single score, NDJSON batch and health.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::Engine;
use futures::{StreamExt, TryStreamExt};
use slidescore_core::api::{BatchLine, ErrorBody, Health, MeasuredSize, ScoreRequest, ScoreResponse, Timings};
use slidescore_core::reward::compose_rewards;
use slidescore_gateway::{GatewayError, RenderRequest, SessionPool};
use thiserror::Error;
use tokio::io::AsyncBufReadExt;
use tokio_stream::wrappers::LinesStream;
use tokio_util::io::StreamReader;

use crate::config::ServiceConfig;
use crate::metrics::{score_page, MetricConfig};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("render queue is full")]
    Busy,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::Busy => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { status: self.status().as_u16(), message: self.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

pub struct AppState {
    pub pool: SessionPool,
    pub cfg: Arc<ServiceConfig>,
    metrics: Arc<MetricConfig>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(pool: SessionPool, cfg: ServiceConfig) -> Arc<Self> {
        let metrics = MetricConfig { whitespace: cfg.whitespace.clone(), geometry: cfg.geometry.clone() };
        Arc::new(Self { pool, cfg: Arc::new(cfg), metrics: Arc::new(metrics), next_id: AtomicU64::new(1) })
    }

    fn fresh_id(&self) -> String {
        format!("req-{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    pub fn health(&self) -> Health {
        let s = self.pool.stats();
        Health {
            status: if s.alive == s.size { "ok" } else { "degraded" }.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            pool_size: s.size,
            sessions_alive: s.alive,
            sessions_busy: s.busy,
            queue_depth: s.queue_depth,
            queue_bound: s.queue_bound,
        }
    }

    fn check(&self, req: &ScoreRequest) -> Result<(), ApiError> {
        if req.html.trim().is_empty() {
            return Err(ApiError::BadRequest("html is empty".into()));
        }
        if req.html.len() > self.cfg.max_html_bytes {
            return Err(ApiError::BadRequest(format!(
                "html is {} bytes; the limit is {}",
                req.html.len(),
                self.cfg.max_html_bytes
            )));
        }
        if req.timeout_ms == Some(0) {
            return Err(ApiError::BadRequest("timeout_ms must be > 0".into()));
        }
        if let Some(s) = &req.shaping {
            s.validate().map_err(|e| ApiError::BadRequest(e.to_string()))?;
        }
        Ok(())
    }

    /// Renders and scores one request.
    pub async fn score(&self, mut req: ScoreRequest) -> Result<ScoreResponse, ApiError> {
        let started = Instant::now();
        if req.request_id.is_empty() {
            req.request_id = self.fresh_id();
        }
        self.check(&req)?;
        let render = RenderRequest {
            html: std::mem::take(&mut req.html),
            pipeline: req.pipeline,
            viewport_width_px: req.viewport_width_px.unwrap_or(self.cfg.viewport_width_px),
            timeout: Duration::from_millis(req.timeout_ms.unwrap_or(self.cfg.default_timeout_ms)),
        };
        let page = self.pool.render(&render).await.map_err(|e| match e {
            GatewayError::QueueFull => ApiError::Busy,
            GatewayError::InvalidRequest(m) => ApiError::BadRequest(m),
            other => ApiError::Internal(other.to_string()),
        })?;
        let render_ms = ms(started.elapsed());

        let metric_started = Instant::now();
        let metrics = self.metrics.clone();
        let (pipeline, overlay) = (req.pipeline, req.return_overlay);
        let (page, scored) = tokio::task::spawn_blocking(move || {
            let s = score_page(&page, pipeline, &metrics, overlay);
            (page, s)
        })
        .await
        .map_err(|e| ApiError::Internal(format!("metric task: {e}")))?;
        let metric_ms = ms(metric_started.elapsed());

        let shaping = req.shaping.as_ref().unwrap_or(&self.cfg.shaping);
        let reward_vector = compose_rewards(&scored.report, shaping);
        let mut warnings = page.warnings;
        if let Some(detail) = page.error_detail {
            warnings.push(detail);
        }
        warnings.extend(scored.warnings);
        Ok(ScoreResponse {
            request_id: req.request_id,
            reward_vector,
            metric_report: scored.report,
            timings: Timings { render_ms, metric_ms, total_ms: ms(started.elapsed()) },
            measured: page
                .measured
                .map(|m| MeasuredSize { width_px: m.width_px, height_px: m.height_px, clamped: m.clamped }),
            overlay_png: scored.overlay_png.map(|png| base64::engine::general_purpose::STANDARD.encode(png)),
            warnings,
        })
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn router(state: Arc<AppState>) -> Router {
    let limit = state.cfg.max_html_bytes * 2 + 64 * 1024;
    Router::new()
        .route("/v1/score", post(score_handler).layer(DefaultBodyLimit::max(limit)))
        .route("/v1/score/batch", post(batch_handler).layer(DefaultBodyLimit::disable()))
        .route("/healthz", get(health_handler))
        .with_state(state)
}

async fn health_handler(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(state.health())
}

async fn score_handler(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<ScoreResponse>, ApiError> {
    let req: ScoreRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))?;
    state.score(req).await.map(Json)
}

/// One parsed batch line, or the error to report for it.
enum Item {
    Score(ScoreRequest),
    Reject(String, ApiError),
}

fn parse_line(line: &str, n: usize, state: &AppState, seen: &mut HashSet<String>) -> Item {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return Item::Reject(format!("line-{n}"), ApiError::BadRequest(format!("malformed request: {e}"))),
    };
    let claimed = value.get("request_id").and_then(|v| v.as_str()).unwrap_or("").to_string();
    let mut req: ScoreRequest = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => {
            let id = if claimed.is_empty() { format!("line-{n}") } else { claimed };
            return Item::Reject(id, ApiError::BadRequest(format!("malformed request: {e}")));
        }
    };
    if req.request_id.is_empty() {
        req.request_id = state.fresh_id();
    }
    if !seen.insert(req.request_id.clone()) {
        let id = req.request_id;
        return Item::Reject(id.clone(), ApiError::BadRequest(format!("duplicate request_id {id:?}")));
    }
    Item::Score(req)
}

async fn batch_handler(State(state): State<Arc<AppState>>, body: Body) -> Response {
    let reader = StreamReader::new(body.into_data_stream().map_err(std::io::Error::other));
    let lines = LinesStream::new(reader.lines());
    let parse_state = state.clone();
    let mut seen = HashSet::new();
    let mut n = 0usize;
    let concurrency = state.cfg.batch_concurrency();

    let out = lines
        .filter_map(move |line| {
            n += 1;
            let item = match line {
                Ok(l) if l.trim().is_empty() => None,
                Ok(l) => Some(parse_line(&l, n, &parse_state, &mut seen)),
                Err(e) => Some(Item::Reject(format!("line-{n}"), ApiError::BadRequest(format!("unreadable line: {e}")))),
            };
            futures::future::ready(item)
        })
        .map(move |item| {
            let state = state.clone();
            async move {
                let line = match item {
                    Item::Reject(request_id, err) => BatchLine::Error { request_id, error: err.body() },
                    Item::Score(req) => {
                        let request_id = req.request_id.clone();
                        match state.score(req).await {
                            Ok(r) => BatchLine::Score(Box::new(r)),
                            Err(err) => BatchLine::Error { request_id, error: err.body() },
                        }
                    }
                };
                let mut bytes = serde_json::to_vec(&line).expect("batch lines serialize");
                bytes.push(b'\n');
                Ok::<_, std::io::Error>(Bytes::from(bytes))
            }
        })
        .buffer_unordered(concurrency);

    Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .body(Body::from_stream(out))
        .expect("static response parts")
}
