//! Locating and launching a headless Chromium process.

use std::path::{Path, PathBuf};
use std::process::Stdio;
use std::time::Duration;

use tokio::io::{AsyncBufReadExt, BufReader};
use tokio::process::{Child, Command};

use crate::GatewayError;

pub const CHROME_ENV: &str = "SLIDESCORE_CHROME";
const PATH_NAMES: &[&str] = &["chromium", "chromium-browser", "google-chrome", "google-chrome-stable", "chrome", "headless_shell"];

/// Resolves the browser binary: `$SLIDESCORE_CHROME`, then well-known names
/// on `PATH`, then the cache location used by `scripts/fetch-chromium.sh`.
pub fn find_browser() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os(CHROME_ENV) {
        let p = PathBuf::from(p);
        return is_executable(&p).then_some(p);
    }
    if let Some(path) = std::env::var_os("PATH") {
        for dir in std::env::split_paths(&path) {
            for name in PATH_NAMES {
                let candidate = dir.join(name);
                if is_executable(&candidate) {
                    return Some(candidate);
                }
            }
        }
    }
    let cache = std::env::var_os("SLIDESCORE_CACHE")
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache/slidescore")))?;
    let p = cache.join("chromium");
    is_executable(&p).then_some(p)
}

fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    p.metadata().map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0).unwrap_or(false)
}

#[derive(Debug, Clone)]
pub struct LaunchOptions {
    pub binary: PathBuf,
    pub startup_timeout: Duration,
    pub extra_args: Vec<String>,
}

impl LaunchOptions {
    pub fn new(binary: PathBuf) -> Self {
        Self { binary, startup_timeout: Duration::from_secs(20), extra_args: Vec::new() }
    }
}

/// A running browser process. Killed when dropped.
pub struct BrowserProcess {
    child: Child,
    pub ws_url: String,
    _profile: tempfile::TempDir,
}

impl BrowserProcess {
    pub async fn launch(opts: &LaunchOptions) -> Result<Self, GatewayError> {
        let profile = tempfile::Builder::new()
            .prefix("slidescore-profile-")
            .tempdir()
            .map_err(|e| GatewayError::Launch(format!("profile dir: {e}")))?;
        let mut cmd = Command::new(&opts.binary);
        cmd.args([
            "--headless=shell",
            "--no-sandbox",
            "--no-zygote",
            "--disable-gpu",
            "--disable-dev-shm-usage",
            "--hide-scrollbars",
            "--mute-audio",
            "--no-first-run",
            "--no-default-browser-check",
            "--disable-extensions",
            "--disable-background-networking",
            "--disable-sync",
            "--allow-file-access-from-files",
            "--force-color-profile=srgb",
            "--font-render-hinting=none",
            "--remote-debugging-port=0",
        ])
        .arg(format!("--user-data-dir={}", profile.path().display()))
        .args(&opts.extra_args)
        .arg("about:blank")
        .env("TMPDIR", profile.path())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .kill_on_drop(true);
        let mut child = cmd
            .spawn()
            .map_err(|e| GatewayError::Launch(format!("{}: {e}", opts.binary.display())))?;

        let stderr = child.stderr.take().expect("piped stderr");
        let mut lines = BufReader::new(stderr).lines();
        let find = async {
            while let Ok(Some(line)) = lines.next_line().await {
                if let Some(rest) = line.split("DevTools listening on ").nth(1) {
                    return Some(rest.trim().to_string());
                }
            }
            None
        };
        let ws_url = match tokio::time::timeout(opts.startup_timeout, find).await {
            Ok(Some(url)) => url,
            Ok(None) => return Err(GatewayError::Launch("browser exited before announcing its endpoint".into())),
            Err(_) => return Err(GatewayError::Launch("timed out waiting for the devtools endpoint".into())),
        };
        // Keep draining stderr so the browser never blocks on a full pipe.
        tokio::spawn(async move { while let Ok(Some(_)) = lines.next_line().await {} });
        Ok(Self { child, ws_url, _profile: profile })
    }

    pub fn pid(&self) -> Option<u32> {
        self.child.id()
    }

    pub fn has_exited(&mut self) -> bool {
        !matches!(self.child.try_wait(), Ok(None))
    }

    pub async fn kill(&mut self) {
        let _ = self.child.kill().await;
    }
}
