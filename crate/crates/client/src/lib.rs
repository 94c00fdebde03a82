//! Thin async client for the slidescore HTTP service.

use std::time::Duration;

use futures::{Stream, StreamExt, TryStreamExt};
use reqwest::StatusCode;
use slidescore_core::api::{BatchLine, ErrorBody, Health, ScoreRequest, ScoreResponse};
use thiserror::Error;
use tokio::io::AsyncBufReadExt;
use tokio_stream::wrappers::LinesStream;
use tokio_util::io::StreamReader;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Status { status: u16, message: String },
    #[error("undecodable response: {0}")]
    Decode(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl ClientError {
    pub fn status(&self) -> Option<u16> {
        match self {
            ClientError::Status { status, .. } => Some(*status),
            ClientError::Http(e) => e.status().map(|s| s.as_u16()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let http = reqwest::Client::builder()
            .connect_timeout(Duration::from_secs(10))
            .build()
            .expect("client without TLS always builds");
        Self::with_http(base_url, http)
    }

    pub fn with_http(base_url: impl Into<String>, http: reqwest::Client) -> Self {
        Self { http, base: base_url.into().trim_end_matches('/').to_string() }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        let resp = self.http.get(format!("{}/healthz", self.base)).send().await?;
        decode(resp).await
    }

    pub async fn score(&self, req: &ScoreRequest) -> Result<ScoreResponse, ClientError> {
        let resp = self.http.post(format!("{}/v1/score", self.base)).json(req).send().await?;
        decode(resp).await
    }

    /// Streams batch results in completion order.
    pub async fn batch_stream(
        &self,
        reqs: Vec<ScoreRequest>,
    ) -> Result<impl Stream<Item = Result<BatchLine, ClientError>>, ClientError> {
        let mut body = Vec::new();
        for r in &reqs {
            serde_json::to_writer(&mut body, r).map_err(|e| ClientError::Decode(e.to_string()))?;
            body.push(b'\n');
        }
        let resp = self
            .http
            .post(format!("{}/v1/score/batch", self.base))
            .header(reqwest::header::CONTENT_TYPE, "application/x-ndjson")
            .body(body)
            .send()
            .await?;
        if !resp.status().is_success() {
            return Err(status_error(resp).await);
        }
        let reader = StreamReader::new(resp.bytes_stream().map_err(std::io::Error::other));
        Ok(LinesStream::new(reader.lines()).filter_map(|line| async move {
            match line {
                Ok(l) if l.trim().is_empty() => None,
                Ok(l) => Some(serde_json::from_str::<BatchLine>(&l).map_err(|e| ClientError::Decode(format!("{e}: {l:.120}")))),
                Err(e) => Some(Err(ClientError::Io(e))),
            }
        }))
    }

    pub async fn batch(&self, reqs: Vec<ScoreRequest>) -> Result<Vec<BatchLine>, ClientError> {
        self.batch_stream(reqs).await?.try_collect().await
    }
}

async fn status_error(resp: reqwest::Response) -> ClientError {
    let status = resp.status();
    let text = resp.text().await.unwrap_or_default();
    let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.message).unwrap_or(text);
    ClientError::Status { status: status.as_u16(), message }
}

async fn decode<T: serde::de::DeserializeOwned>(resp: reqwest::Response) -> Result<T, ClientError> {
    if resp.status() != StatusCode::OK {
        return Err(status_error(resp).await);
    }
    let bytes = resp.bytes().await?;
    serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode(e.to_string()))
}
