//! Browser-backed render sessions.

use std::time::Duration;

use async_trait::async_trait;

use crate::browser::{find_browser, BrowserProcess, LaunchOptions};
use crate::cdp::CdpConnection;
use crate::page::CdpPage;
use crate::pipeline::{render_page, RenderRequest, RenderedPage};
use crate::GatewayError;

pub const DEFAULT_SETTLE: Duration = Duration::from_millis(500);

/// One exclusive rendering context. A session is leased to a single request at a time.
#[async_trait]
pub trait RenderSession: Send {
    async fn render(&mut self, req: &RenderRequest) -> Result<RenderedPage, GatewayError>;
    fn is_alive(&mut self) -> bool;
    async fn shutdown(&mut self) {}
    fn pid(&self) -> Option<u32> {
        None
    }
}

#[async_trait]
pub trait SessionFactory: Send + Sync {
    async fn create(&self) -> Result<Box<dyn RenderSession>, GatewayError>;
}

/// A dedicated headless Chromium process with one tab.
pub struct ChromeSession {
    process: BrowserProcess,
    conn: CdpConnection,
    page: CdpPage,
}

impl ChromeSession {
    pub async fn launch(opts: &LaunchOptions, settle: Duration) -> Result<Self, GatewayError> {
        let process = BrowserProcess::launch(opts).await?;
        let conn = CdpConnection::connect(&process.ws_url).await?;
        let page = CdpPage::open(conn.clone(), settle).await?;
        Ok(Self { process, conn, page })
    }
}

#[async_trait]
impl RenderSession for ChromeSession {
    async fn render(&mut self, req: &RenderRequest) -> Result<RenderedPage, GatewayError> {
        render_page(&mut self.page, req).await
    }

    fn is_alive(&mut self) -> bool {
        !self.conn.is_closed() && !self.process.has_exited()
    }

    async fn shutdown(&mut self) {
        self.process.kill().await;
    }

    fn pid(&self) -> Option<u32> {
        self.process.pid()
    }
}

#[derive(Debug, Clone)]
pub struct ChromeFactory {
    pub launch: LaunchOptions,
    pub settle: Duration,
}

impl ChromeFactory {
    /// Uses the discovered browser binary, if any.
    pub fn discover(settle: Duration) -> Result<Self, GatewayError> {
        let bin = find_browser().ok_or(GatewayError::NoBrowser)?;
        Ok(Self { launch: LaunchOptions::new(bin), settle })
    }
}

#[async_trait]
impl SessionFactory for ChromeFactory {
    async fn create(&self) -> Result<Box<dyn RenderSession>, GatewayError> {
        Ok(Box::new(ChromeSession::launch(&self.launch, self.settle).await?))
    }
}
