//! Render gateway: drives headless Chromium sessions to measure slide aspect
//! ratio, capture sanitized screenshots and probe the rendered layout.

pub mod browser;
pub mod cdp;
#[cfg(feature = "fake")]
pub mod fake;
pub mod page;
pub mod pipeline;
pub mod pool;
pub mod sanitize;
pub mod session;

use thiserror::Error;

pub use pipeline::{AspectMeasurement, RenderRequest, RenderedPage};
pub use pool::{PoolConfig, PoolStats, SessionPool};
pub use session::{ChromeFactory, RenderSession, SessionFactory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GatewayError {
    #[error("no headless browser found; set SLIDESCORE_CHROME or run scripts/fetch-chromium.sh")]
    NoBrowser,
    #[error("browser launch failed: {0}")]
    Launch(String),
    #[error("devtools protocol error: {0}")]
    Protocol(String),
    #[error("render session lost: {0}")]
    SessionLost(String),
    #[error("render timed out")]
    Timeout,
    #[error("navigation failed: {0}")]
    Navigation(String),
    #[error("page script failed: {0}")]
    Script(String),
    #[error("probe payload rejected: {0}")]
    BadProbe(String),
    #[error("page has no content extent")]
    EmptyPage,
    #[error("invalid render request: {0}")]
    InvalidRequest(String),
    #[error("render queue is full")]
    QueueFull,
    #[error("io: {0}")]
    Io(String),
}
