use anyhow::Context;
use slidescore_service::{start_with_chrome, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let cfg = ServiceConfig::from_env().context("loading configuration")?;
    let server = start_with_chrome(cfg).await?;
    println!("listening on {}", server.url());
    tokio::signal::ctrl_c().await?;
    tracing::info!("shutting down");
    server.stop().await?;
    Ok(())
}
