//! Render pipelines: which HTML variant is loaded at which viewport, and what
//! is captured from it.

use std::time::Duration;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use slidescore_core::api::Pipeline;
use slidescore_core::geometry::Canvas;
use slidescore_core::pixel::decode_png;
use slidescore_core::reward::RenderErrorCode;
use slidescore_core::snapshot::{LayoutSnapshot, ProbePayload, DEFAULT_MAX_NODES};

use crate::page::PageDriver;
use crate::sanitize::{sanitize_for_aspect, sanitize_for_whitespace};
use crate::GatewayError;

pub const PROBE_JS: &str = include_str!("../assets/probe.js");
pub const STRIP_BACKGROUNDS_JS: &str = include_str!("../assets/strip_backgrounds.js");

pub const DEFAULT_VIEWPORT_WIDTH: u32 = 1280;
pub const INITIAL_VIEWPORT_HEIGHT: u32 = 10;
pub const MIN_VIEWPORT_HEIGHT: u32 = 10;
pub const MAX_VIEWPORT_HEIGHT: u32 = 20_000;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(15_000);
pub const FULL_BLEED_COVERAGE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderRequest {
    pub html: String,
    pub pipeline: Pipeline,
    pub viewport_width_px: u32,
    pub timeout: Duration,
}

impl RenderRequest {
    pub fn new(html: impl Into<String>, pipeline: Pipeline) -> Self {
        Self { html: html.into(), pipeline, viewport_width_px: DEFAULT_VIEWPORT_WIDTH, timeout: DEFAULT_TIMEOUT }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.html.is_empty() {
            return Err(GatewayError::InvalidRequest("html is empty".into()));
        }
        if self.timeout.is_zero() {
            return Err(GatewayError::InvalidRequest("timeout must be positive".into()));
        }
        if self.viewport_width_px == 0 || self.viewport_width_px > MAX_VIEWPORT_HEIGHT {
            return Err(GatewayError::InvalidRequest(format!("viewport width {}", self.viewport_width_px)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AspectMeasurement {
    pub width_px: u32,
    pub height_px: u32,
    pub ratio: f64,
    pub content_height_px: i64,
    /// The content height fell outside `[MIN, MAX]_VIEWPORT_HEIGHT`.
    pub clamped: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RenderedPage {
    pub screenshot: Option<RgbImage>,
    pub width_px: u32,
    pub height_px: u32,
    pub snapshot: Option<LayoutSnapshot>,
    pub render_error: Option<RenderErrorCode>,
    pub error_detail: Option<String>,
    pub measured: Option<AspectMeasurement>,
    pub warnings: Vec<String>,
}

impl RenderedPage {
    pub fn failed(code: RenderErrorCode, detail: impl Into<String>) -> Self {
        Self { render_error: Some(code), error_detail: Some(detail.into()), ..Default::default() }
    }

    fn with_screenshot(mut self, img: RgbImage) -> Self {
        self.width_px = img.width();
        self.height_px = img.height();
        self.screenshot = Some(img);
        self
    }
}

/// Maps a gateway failure onto the render error code reported downstream.
pub fn error_code(err: &GatewayError) -> RenderErrorCode {
    match err {
        GatewayError::Timeout => RenderErrorCode::Timeout,
        GatewayError::Script(_) | GatewayError::BadProbe(_) => RenderErrorCode::ProbeFailed,
        GatewayError::EmptyPage => RenderErrorCode::EmptyPage,
        _ => RenderErrorCode::NavigationFailed,
    }
}

pub fn probe_expression(max_nodes: usize) -> String {
    format!("({})({max_nodes})", PROBE_JS.trim_end().trim_end_matches(';'))
}

fn strip_expression() -> String {
    format!("({})({FULL_BLEED_COVERAGE})", STRIP_BACKGROUNDS_JS.trim_end().trim_end_matches(';'))
}

pub fn clamp_height(content_height_px: i64) -> (u32, bool) {
    let lo = MIN_VIEWPORT_HEIGHT as i64;
    let hi = MAX_VIEWPORT_HEIGHT as i64;
    (content_height_px.clamp(lo, hi) as u32, !(lo..=hi).contains(&content_height_px))
}

async fn probe(driver: &mut dyn PageDriver, max_nodes: usize) -> Result<ProbePayload, GatewayError> {
    let value = driver.evaluate(&probe_expression(max_nodes)).await?;
    ProbePayload::from_value(value).map_err(|e| GatewayError::BadProbe(e.to_string()))
}

/// Loads `html` into a `width × 10` viewport, reads the content extent and
/// resizes the viewport to it.
pub async fn measure_aspect_ratio(driver: &mut dyn PageDriver, html: &str, width: u32) -> Result<AspectMeasurement, GatewayError> {
    driver.set_viewport(width, INITIAL_VIEWPORT_HEIGHT).await?;
    driver.load_html(html).await?;
    let extent = probe(driver, 0).await?;
    if let Some(err) = extent.error {
        return Err(GatewayError::BadProbe(err));
    }
    let content = extent.page_extent.content_height_px;
    if content <= 0 {
        return Err(GatewayError::EmptyPage);
    }
    let (height, clamped) = clamp_height(content);
    driver.set_viewport(width, height).await?;
    Ok(AspectMeasurement { width_px: width, height_px: height, ratio: width as f64 / height as f64, content_height_px: content, clamped })
}

async fn capture(driver: &mut dyn PageDriver) -> Result<RgbImage, GatewayError> {
    let png = driver.screenshot().await?;
    let img = decode_png(&png).map_err(|e| GatewayError::Protocol(format!("screenshot decode: {e}")))?;
    if img.width() == 0 || img.height() == 0 {
        return Err(GatewayError::EmptyPage);
    }
    Ok(img)
}

async fn strip_full_bleed(driver: &mut dyn PageDriver) -> Result<u64, GatewayError> {
    Ok(driver.evaluate(&strip_expression()).await?.as_u64().unwrap_or(0))
}

async fn snapshot_at(driver: &mut dyn PageDriver, canvas: Canvas) -> Result<(LayoutSnapshot, Vec<String>), GatewayError> {
    let payload = probe(driver, DEFAULT_MAX_NODES).await?;
    let mut notes = Vec::new();
    if payload.truncated {
        notes.push(format!("probe truncated at {DEFAULT_MAX_NODES} nodes"));
    }
    if payload.skipped_frames > 0 {
        notes.push(format!("{} frame(s) not traversed", payload.skipped_frames));
    }
    if payload.skipped_shadow_roots > 0 {
        notes.push(format!("{} shadow root(s) not traversed", payload.skipped_shadow_roots));
    }
    Ok((LayoutSnapshot::from_probe(payload, canvas), notes))
}

/// Runs `req.pipeline` on `driver`. The caller enforces the timeout.
pub async fn run_pipeline(driver: &mut dyn PageDriver, req: &RenderRequest) -> Result<RenderedPage, GatewayError> {
    req.validate()?;
    let width = req.viewport_width_px;
    let mut page = RenderedPage::default();
    match req.pipeline {
        Pipeline::Aspect => {
            let s = sanitize_for_aspect(&req.html);
            page.warnings.extend(s.warnings);
            page.measured = Some(measure_aspect_ratio(driver, &s.html, width).await?);
            let img = capture(driver).await?;
            Ok(page.with_screenshot(img))
        }
        Pipeline::Whitespace => {
            let s = sanitize_for_whitespace(&req.html);
            page.warnings.extend(s.warnings);
            measure_aspect_ratio(driver, &s.html, width).await?;
            note_stripped(&mut page, strip_full_bleed(driver).await?);
            let img = capture(driver).await?;
            Ok(page.with_screenshot(img))
        }
        Pipeline::Geometry => {
            let m = measure_aspect_ratio(driver, &req.html, width).await?;
            let (snap, notes) = snapshot_at(driver, Canvas::new(m.width_px, m.height_px)).await?;
            page.warnings.extend(notes);
            page.snapshot = Some(snap);
            let img = capture(driver).await?;
            Ok(page.with_screenshot(img))
        }
        Pipeline::Full => {
            let s = sanitize_for_aspect(&req.html);
            page.warnings.extend(s.warnings);
            let m = measure_aspect_ratio(driver, &s.html, width).await?;
            page.measured = Some(m);

            let ws = sanitize_for_whitespace(&req.html);
            page.warnings.extend(ws.warnings);
            driver.set_viewport(width, m.height_px).await?;
            driver.load_html(&ws.html).await?;
            note_stripped(&mut page, strip_full_bleed(driver).await?);
            let img = capture(driver).await?;

            driver.load_html(&req.html).await?;
            let (snap, notes) = snapshot_at(driver, Canvas::new(m.width_px, m.height_px)).await?;
            page.warnings.extend(notes);
            page.snapshot = Some(snap);
            Ok(page.with_screenshot(img))
        }
    }
}

fn note_stripped(page: &mut RenderedPage, n: u64) {
    if n > 0 {
        page.warnings.push(format!("removed {n} full-bleed background element(s)"));
    }
}

/// Like [`run_pipeline`] with a deadline; content-level failures become a
/// `RenderedPage` with `render_error` set.
pub async fn render_page(driver: &mut dyn PageDriver, req: &RenderRequest) -> Result<RenderedPage, GatewayError> {
    match tokio::time::timeout(req.timeout, run_pipeline(driver, req)).await {
        Err(_) => Err(GatewayError::Timeout),
        Ok(r) => r,
    }
}
