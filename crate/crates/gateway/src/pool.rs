//! Bounded pool of render sessions with admission control and self-healing.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::{Notify, Semaphore};

use crate::pipeline::{error_code, RenderRequest, RenderedPage};
use crate::session::{RenderSession, SessionFactory};
use crate::GatewayError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PoolConfig {
    pub size: usize,
    /// Requests admitted (waiting or rendering) before new ones are refused.
    pub queue_bound: usize,
    /// Consecutive content failures after which a session is replaced.
    pub recycle_after: u32,
    pub heal_interval_ms: u64,
    /// Extra attempts on a fresh session when a session dies mid-render.
    pub crash_retries: u32,
}

impl Default for PoolConfig {
    fn default() -> Self {
        Self { size: 4, queue_bound: 256, recycle_after: 5, heal_interval_ms: 250, crash_retries: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolStats {
    pub size: usize,
    pub alive: usize,
    pub busy: usize,
    pub high_water: usize,
    pub queue_depth: usize,
    pub queue_bound: usize,
    pub renders: u64,
    pub recycled: u64,
    pub retries: u64,
}

struct Slot {
    session: Box<dyn RenderSession>,
    failures: u32,
}

struct Inner {
    factory: Arc<dyn SessionFactory>,
    cfg: PoolConfig,
    permits: Semaphore,
    idle: Mutex<Vec<Slot>>,
    live: AtomicUsize,
    busy: AtomicUsize,
    high_water: AtomicUsize,
    queued: AtomicUsize,
    renders: AtomicU64,
    recycled: AtomicU64,
    retries: AtomicU64,
    heal: Notify,
    idle_ready: Notify,
}

#[derive(Clone)]
pub struct SessionPool {
    inner: Arc<Inner>,
}

/// Holds a queue slot until dropped.
struct Admission<'a>(&'a AtomicUsize);

impl Drop for Admission<'_> {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

impl SessionPool {
    /// Starts `cfg.size` sessions and the background healer.
    pub async fn start(factory: Arc<dyn SessionFactory>, cfg: PoolConfig) -> Result<Self, GatewayError> {
        if cfg.size == 0 {
            return Err(GatewayError::InvalidRequest("pool size must be >= 1".into()));
        }
        let inner = Arc::new(Inner {
            factory,
            permits: Semaphore::new(cfg.size),
            idle: Mutex::new(Vec::with_capacity(cfg.size)),
            live: AtomicUsize::new(0),
            busy: AtomicUsize::new(0),
            high_water: AtomicUsize::new(0),
            queued: AtomicUsize::new(0),
            renders: AtomicU64::new(0),
            recycled: AtomicU64::new(0),
            retries: AtomicU64::new(0),
            heal: Notify::new(),
            idle_ready: Notify::new(),
            cfg,
        });
        let created = futures::future::join_all((0..inner.cfg.size).map(|_| inner.factory.create())).await;
        for s in created {
            let session = s?;
            inner.live.fetch_add(1, Ordering::SeqCst);
            inner.idle.lock().unwrap().push(Slot { session, failures: 0 });
        }
        let weak = Arc::downgrade(&inner);
        tokio::spawn(async move {
            loop {
                let Some(inner) = weak.upgrade() else { break };
                let interval = Duration::from_millis(inner.cfg.heal_interval_ms.max(1));
                let _ = tokio::time::timeout(interval, inner.heal.notified()).await;
                heal(&inner).await;
            }
        });
        Ok(Self { inner })
    }

    pub fn stats(&self) -> PoolStats {
        let i = &self.inner;
        PoolStats {
            size: i.cfg.size,
            alive: i.live.load(Ordering::SeqCst),
            busy: i.busy.load(Ordering::SeqCst),
            high_water: i.high_water.load(Ordering::SeqCst),
            queue_depth: i.queued.load(Ordering::SeqCst),
            queue_bound: i.cfg.queue_bound,
            renders: i.renders.load(Ordering::SeqCst),
            recycled: i.recycled.load(Ordering::SeqCst),
            retries: i.retries.load(Ordering::SeqCst),
        }
    }

    /// Process ids of idle sessions, for fault-injection in tests.
    pub fn idle_pids(&self) -> Vec<u32> {
        self.inner.idle.lock().unwrap().iter().filter_map(|s| s.session.pid()).collect()
    }

    /// Renders on a leased session. Errors only for refused or invalid
    /// requests; render failures come back inside the page.
    pub async fn render(&self, req: &RenderRequest) -> Result<RenderedPage, GatewayError> {
        req.validate()?;
        let inner = &self.inner;
        let depth = inner.queued.fetch_add(1, Ordering::SeqCst);
        let _admission = Admission(&inner.queued);
        if depth >= inner.cfg.queue_bound {
            return Err(GatewayError::QueueFull);
        }
        let _permit = inner.permits.acquire().await.expect("semaphore never closed");

        let mut attempt = 0;
        loop {
            let mut slot = match take_slot(inner).await {
                Ok(s) => s,
                Err(e) => return Ok(RenderedPage::failed(error_code(&e), e.to_string())),
            };
            let busy = inner.busy.fetch_add(1, Ordering::SeqCst) + 1;
            inner.high_water.fetch_max(busy, Ordering::SeqCst);
            let result = slot.session.render(req).await;
            inner.busy.fetch_sub(1, Ordering::SeqCst);
            inner.renders.fetch_add(1, Ordering::SeqCst);

            match result {
                Ok(page) => {
                    slot.failures = 0;
                    release(inner, slot);
                    return Ok(page);
                }
                Err(e) if is_session_fault(&e) || !slot.session.is_alive() => {
                    tracing::warn!(error = %e, "render session lost");
                    destroy(inner, slot);
                    if attempt < inner.cfg.crash_retries {
                        attempt += 1;
                        inner.retries.fetch_add(1, Ordering::SeqCst);
                        continue;
                    }
                    return Ok(RenderedPage::failed(error_code(&e), e.to_string()));
                }
                Err(e) => {
                    slot.failures += 1;
                    // A timed-out page may still be spinning; never reuse it.
                    if matches!(e, GatewayError::Timeout) || slot.failures >= inner.cfg.recycle_after {
                        destroy(inner, slot);
                    } else {
                        release(inner, slot);
                    }
                    return Ok(RenderedPage::failed(error_code(&e), e.to_string()));
                }
            }
        }
    }
}

fn is_session_fault(e: &GatewayError) -> bool {
    matches!(e, GatewayError::SessionLost(_) | GatewayError::Protocol(_) | GatewayError::Launch(_))
}

async fn take_slot(inner: &Inner) -> Result<Slot, GatewayError> {
    loop {
        let popped = inner.idle.lock().unwrap().pop();
        if let Some(mut slot) = popped {
            if slot.session.is_alive() {
                return Ok(slot);
            }
            destroy(inner, slot);
            continue;
        }
        if reserve(inner) {
            return match inner.factory.create().await {
                Ok(session) => Ok(Slot { session, failures: 0 }),
                Err(e) => {
                    inner.live.fetch_sub(1, Ordering::SeqCst);
                    Err(e)
                }
            };
        }
        // The healer is replacing a session; wait for it to land.
        let _ = tokio::time::timeout(Duration::from_millis(50), inner.idle_ready.notified()).await;
    }
}

/// Claims room for one more live session without exceeding the pool size.
fn reserve(inner: &Inner) -> bool {
    inner
        .live
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| (n < inner.cfg.size).then_some(n + 1))
        .is_ok()
}

fn release(inner: &Inner, slot: Slot) {
    inner.idle.lock().unwrap().push(slot);
    inner.idle_ready.notify_one();
}

fn destroy(inner: &Inner, mut slot: Slot) {
    inner.live.fetch_sub(1, Ordering::SeqCst);
    inner.recycled.fetch_add(1, Ordering::SeqCst);
    tokio::spawn(async move { slot.session.shutdown().await });
    inner.heal.notify_one();
}

async fn heal(inner: &Arc<Inner>) {
    let dead: Vec<Slot> = {
        let mut idle = inner.idle.lock().unwrap();
        let mut dead = Vec::new();
        let mut i = 0;
        while i < idle.len() {
            if idle[i].session.is_alive() {
                i += 1;
            } else {
                dead.push(idle.swap_remove(i));
            }
        }
        dead
    };
    for slot in dead {
        destroy(inner, slot);
    }
    while reserve(inner) {
        match inner.factory.create().await {
            Ok(session) => release(inner, Slot { session, failures: 0 }),
            Err(e) => {
                inner.live.fetch_sub(1, Ordering::SeqCst);
                tracing::error!(error = %e, "could not replace render session");
                break;
            }
        }
    }
}
