//! The page-level operations the pipelines need, and their CDP implementation.

use std::path::PathBuf;
use std::time::Duration;

use async_trait::async_trait;
use base64::Engine;
use serde_json::{json, Value};

use crate::cdp::CdpConnection;
use crate::GatewayError;

#[async_trait]
pub trait PageDriver: Send {
    async fn set_viewport(&mut self, width: u32, height: u32) -> Result<(), GatewayError>;
    /// Loads a document and returns once the load event fired and the page settled.
    async fn load_html(&mut self, html: &str) -> Result<(), GatewayError>;
    /// Evaluates an expression and returns its JSON value.
    async fn evaluate(&mut self, expression: &str) -> Result<Value, GatewayError>;
    /// PNG of the current viewport.
    async fn screenshot(&mut self) -> Result<Vec<u8>, GatewayError>;
}

/// One browser tab driven over a flattened CDP session.
pub struct CdpPage {
    conn: CdpConnection,
    session_id: String,
    settle: Duration,
    docs: tempfile::TempDir,
    counter: u64,
}

impl CdpPage {
    pub async fn open(conn: CdpConnection, settle: Duration) -> Result<Self, GatewayError> {
        let target = conn.call("Target.createTarget", json!({ "url": "about:blank" }), None).await?;
        let target_id = target["targetId"]
            .as_str()
            .ok_or_else(|| GatewayError::Protocol("createTarget without targetId".into()))?;
        let attached = conn
            .call("Target.attachToTarget", json!({ "targetId": target_id, "flatten": true }), None)
            .await?;
        let session_id = attached["sessionId"]
            .as_str()
            .ok_or_else(|| GatewayError::Protocol("attachToTarget without sessionId".into()))?
            .to_string();
        conn.call("Page.enable", json!({}), Some(&session_id)).await?;
        let docs = tempfile::Builder::new()
            .prefix("slidescore-docs-")
            .tempdir()
            .map_err(|e| GatewayError::Io(e.to_string()))?;
        Ok(Self { conn, session_id, settle, docs, counter: 0 })
    }

    async fn call(&self, method: &str, params: Value) -> Result<Value, GatewayError> {
        self.conn.call(method, params, Some(&self.session_id)).await
    }

    fn next_doc_path(&mut self) -> PathBuf {
        self.counter += 1;
        self.docs.path().join(format!("doc-{}.html", self.counter))
    }
}

#[async_trait]
impl PageDriver for CdpPage {
    async fn set_viewport(&mut self, width: u32, height: u32) -> Result<(), GatewayError> {
        self.call(
            "Emulation.setDeviceMetricsOverride",
            json!({ "width": width, "height": height, "deviceScaleFactor": 1, "mobile": false }),
        )
        .await
        .map(drop)
    }

    async fn load_html(&mut self, html: &str) -> Result<(), GatewayError> {
        let path = self.next_doc_path();
        tokio::fs::write(&path, html).await.map_err(|e| GatewayError::Io(e.to_string()))?;
        let url = format!("file://{}", path.display());

        let mut events = self.conn.subscribe();
        let nav = self.call("Page.navigate", json!({ "url": url })).await?;
        if let Some(err) = nav.get("errorText").and_then(Value::as_str).filter(|s| !s.is_empty()) {
            return Err(GatewayError::Navigation(err.to_string()));
        }
        loop {
            match events.recv().await {
                Ok(ev) if ev.method == "Page.loadEventFired" && ev.session_id.as_deref() == Some(&self.session_id) => break,
                Ok(_) => {}
                Err(tokio::sync::broadcast::error::RecvError::Lagged(_)) => {}
                Err(_) => return Err(GatewayError::SessionLost("event stream closed".into())),
            }
        }
        let _ = tokio::fs::remove_file(&path).await;
        self.evaluate("document.fonts ? document.fonts.ready.then(() => true) : true").await?;
        tokio::time::sleep(self.settle).await;
        Ok(())
    }

    async fn evaluate(&mut self, expression: &str) -> Result<Value, GatewayError> {
        let res = self
            .call(
                "Runtime.evaluate",
                json!({ "expression": expression, "returnByValue": true, "awaitPromise": true }),
            )
            .await?;
        if let Some(ex) = res.get("exceptionDetails") {
            let text = ex
                .pointer("/exception/description")
                .or_else(|| ex.get("text"))
                .and_then(Value::as_str)
                .unwrap_or("script exception");
            return Err(GatewayError::Script(text.to_string()));
        }
        Ok(res.pointer("/result/value").cloned().unwrap_or(Value::Null))
    }

    async fn screenshot(&mut self) -> Result<Vec<u8>, GatewayError> {
        let res = self
            .call("Page.captureScreenshot", json!({ "format": "png", "fromSurface": true }))
            .await?;
        let data = res["data"]
            .as_str()
            .ok_or_else(|| GatewayError::Protocol("captureScreenshot without data".into()))?;
        base64::engine::general_purpose::STANDARD
            .decode(data)
            .map_err(|e| GatewayError::Protocol(format!("screenshot base64: {e}")))
    }
}
