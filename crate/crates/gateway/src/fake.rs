//! In-process stand-in for browser sessions, for exercising the pool and the
//! service without Chromium.
//!
//! The fake reads markers from the request HTML:
//! `data-fake="hang"` never finishes, `data-fake="crash"` kills the session,
//! `data-fake="fail"` fails navigation, and `data-height="N"` sets the page
//! height (default 720). Anything else renders as a white page with one
//! centered dark block.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use image::{Rgb, RgbImage};
use slidescore_core::api::Pipeline;
use slidescore_core::geometry::{BBox, Canvas};
use slidescore_core::snapshot::{LayoutSnapshot, RawNode};

use crate::pipeline::{clamp_height, AspectMeasurement, RenderRequest, RenderedPage};
use crate::session::{RenderSession, SessionFactory};
use crate::GatewayError;

#[derive(Debug, Default)]
pub struct FakeStats {
    pub created: AtomicUsize,
    pub in_flight: AtomicUsize,
    pub peak: AtomicUsize,
    pub renders: AtomicUsize,
}

#[derive(Debug)]
pub struct FakeFactory {
    pub delay: Duration,
    pub stats: Arc<FakeStats>,
    pub fail_create: AtomicBool,
    handles: Mutex<Vec<Arc<AtomicBool>>>,
}

impl FakeFactory {
    pub fn new(delay: Duration) -> Self {
        Self { delay, stats: Arc::default(), fail_create: AtomicBool::new(false), handles: Mutex::default() }
    }

    /// Marks every session created so far as dead.
    pub fn kill_all(&self) {
        for h in self.handles.lock().unwrap().iter() {
            h.store(false, Ordering::SeqCst);
        }
    }

    /// Marks the session created `n`-th (from zero) as dead.
    pub fn kill(&self, n: usize) {
        if let Some(h) = self.handles.lock().unwrap().get(n) {
            h.store(false, Ordering::SeqCst);
        }
    }
}

#[async_trait]
impl SessionFactory for FakeFactory {
    async fn create(&self) -> Result<Box<dyn RenderSession>, GatewayError> {
        if self.fail_create.load(Ordering::SeqCst) {
            return Err(GatewayError::Launch("fake launch refused".into()));
        }
        let alive = Arc::new(AtomicBool::new(true));
        let mut handles = self.handles.lock().unwrap();
        handles.push(alive.clone());
        self.stats.created.fetch_add(1, Ordering::SeqCst);
        Ok(Box::new(FakeSession { alive, delay: self.delay, stats: self.stats.clone(), id: handles.len() as u32 }))
    }
}

pub struct FakeSession {
    alive: Arc<AtomicBool>,
    delay: Duration,
    stats: Arc<FakeStats>,
    id: u32,
}

struct InFlight<'a>(&'a FakeStats);

impl<'a> InFlight<'a> {
    fn enter(stats: &'a FakeStats) -> Self {
        let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        stats.peak.fetch_max(now, Ordering::SeqCst);
        stats.renders.fetch_add(1, Ordering::SeqCst);
        Self(stats)
    }
}

impl Drop for InFlight<'_> {
    fn drop(&mut self) {
        self.0.in_flight.fetch_sub(1, Ordering::SeqCst);
    }
}

fn marker<'a>(html: &'a str, attr: &str) -> Option<&'a str> {
    let start = html.find(&format!("{attr}=\""))? + attr.len() + 2;
    let len = html[start..].find('"')?;
    Some(&html[start..start + len])
}

/// The page the fake draws for `req`.
pub fn fake_page(req: &RenderRequest) -> RenderedPage {
    let width = req.viewport_width_px;
    let content = marker(&req.html, "data-height").and_then(|h| h.parse::<i64>().ok()).unwrap_or(720);
    let (height, clamped) = clamp_height(content);
    let block = BBox::new(width as f64 * 0.25, height as f64 * 0.25, width as f64 * 0.5, height as f64 * 0.5);

    let mut img = RgbImage::from_pixel(width, height, Rgb([255, 255, 255]));
    for y in block.y as u32..block.bottom() as u32 {
        for x in block.x as u32..block.right() as u32 {
            let v = (((x * 7 + y * 13) % 5) * 40) as u8;
            img.put_pixel(x, y, Rgb([v, v, v]));
        }
    }

    let mut page = RenderedPage { width_px: width, height_px: height, screenshot: Some(img), ..Default::default() };
    if matches!(req.pipeline, Pipeline::Aspect | Pipeline::Full) {
        page.measured = Some(AspectMeasurement {
            width_px: width,
            height_px: height,
            ratio: width as f64 / height as f64,
            content_height_px: content,
            clamped,
        });
    }
    if req.pipeline.measures_geometry() {
        let mut text = RawNode::element(1, Some(0), "p", block);
        text.has_visible_text = true;
        let nodes = vec![RawNode::element(0, None, "div", block), text];
        page.snapshot = Some(LayoutSnapshot::new(Canvas::new(width, height), nodes).expect("valid fake nodes"));
    }
    page
}

#[async_trait]
impl RenderSession for FakeSession {
    async fn render(&mut self, req: &RenderRequest) -> Result<RenderedPage, GatewayError> {
        if !self.is_alive() {
            return Err(GatewayError::SessionLost("fake session is dead".into()));
        }
        let _guard = InFlight::enter(&self.stats);
        let work = async {
            tokio::time::sleep(self.delay).await;
            match marker(&req.html, "data-fake") {
                Some("hang") => std::future::pending().await,
                Some("crash") => {
                    self.alive.store(false, Ordering::SeqCst);
                    Err(GatewayError::SessionLost("fake crash".into()))
                }
                Some("fail") => Err(GatewayError::Navigation("fake navigation failure".into())),
                _ => Ok(fake_page(req)),
            }
        };
        match tokio::time::timeout(req.timeout, work).await {
            Err(_) => Err(GatewayError::Timeout),
            Ok(r) => r,
        }
    }

    fn is_alive(&mut self) -> bool {
        self.alive.load(Ordering::SeqCst)
    }

    async fn shutdown(&mut self) {
        self.alive.store(false, Ordering::SeqCst);
    }

    fn pid(&self) -> Option<u32> {
        Some(self.id)
    }
}
