//! Minimal Chrome DevTools Protocol client over a single WebSocket, using
//! flattened target sessions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use futures::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio_tungstenite::tungstenite::Message;

use crate::GatewayError;

#[derive(Debug, Clone)]
pub struct CdpEvent {
    pub session_id: Option<String>,
    pub method: String,
    pub params: Value,
}

type Pending = Arc<Mutex<HashMap<u64, oneshot::Sender<Result<Value, GatewayError>>>>>;

/// A connection to the browser endpoint. Cheap to clone.
#[derive(Clone)]
pub struct CdpConnection {
    next_id: Arc<AtomicU64>,
    pending: Pending,
    outbox: mpsc::UnboundedSender<String>,
    events: broadcast::Sender<CdpEvent>,
    closed: Arc<std::sync::atomic::AtomicBool>,
}

impl CdpConnection {
    pub async fn connect(ws_url: &str) -> Result<Self, GatewayError> {
        let (ws, _) = tokio_tungstenite::connect_async(ws_url)
            .await
            .map_err(|e| GatewayError::Protocol(format!("connect {ws_url}: {e}")))?;
        let (mut sink, mut stream) = ws.split();
        let pending: Pending = Arc::default();
        let (outbox, mut rx) = mpsc::unbounded_channel::<String>();
        let (events, _) = broadcast::channel(1024);
        let closed = Arc::new(std::sync::atomic::AtomicBool::new(false));

        tokio::spawn(async move {
            while let Some(text) = rx.recv().await {
                if sink.send(Message::text(text)).await.is_err() {
                    break;
                }
            }
            let _ = sink.close().await;
        });

        let reader_pending = pending.clone();
        let reader_events = events.clone();
        let reader_closed = closed.clone();
        tokio::spawn(async move {
            while let Some(msg) = stream.next().await {
                let text = match msg {
                    Ok(Message::Text(t)) => t.to_string(),
                    Ok(Message::Binary(b)) => String::from_utf8_lossy(&b).into_owned(),
                    Ok(Message::Close(_)) | Err(_) => break,
                    Ok(_) => continue,
                };
                let Ok(v) = serde_json::from_str::<Value>(&text) else { continue };
                if let Some(id) = v.get("id").and_then(Value::as_u64) {
                    let tx = reader_pending.lock().unwrap().remove(&id);
                    if let Some(tx) = tx {
                        let res = match v.get("error") {
                            Some(err) => Err(GatewayError::Protocol(err.to_string())),
                            None => Ok(v.get("result").cloned().unwrap_or(Value::Null)),
                        };
                        let _ = tx.send(res);
                    }
                } else if let Some(method) = v.get("method").and_then(Value::as_str) {
                    let _ = reader_events.send(CdpEvent {
                        session_id: v.get("sessionId").and_then(Value::as_str).map(String::from),
                        method: method.to_string(),
                        params: v.get("params").cloned().unwrap_or(Value::Null),
                    });
                }
            }
            reader_closed.store(true, Ordering::SeqCst);
            for (_, tx) in reader_pending.lock().unwrap().drain() {
                let _ = tx.send(Err(GatewayError::SessionLost("browser connection closed".into())));
            }
        });

        Ok(Self { next_id: Arc::new(AtomicU64::new(1)), pending, outbox, events, closed })
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    pub fn subscribe(&self) -> broadcast::Receiver<CdpEvent> {
        self.events.subscribe()
    }

    pub async fn call(&self, method: &str, params: Value, session_id: Option<&str>) -> Result<Value, GatewayError> {
        if self.is_closed() {
            return Err(GatewayError::SessionLost("browser connection closed".into()));
        }
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let mut msg = json!({ "id": id, "method": method, "params": params });
        if let Some(s) = session_id {
            msg["sessionId"] = json!(s);
        }
        let (tx, rx) = oneshot::channel();
        self.pending.lock().unwrap().insert(id, tx);
        if self.outbox.send(msg.to_string()).is_err() {
            self.pending.lock().unwrap().remove(&id);
            return Err(GatewayError::SessionLost("writer task gone".into()));
        }
        rx.await.map_err(|_| GatewayError::SessionLost("response channel dropped".into()))?
    }
}
