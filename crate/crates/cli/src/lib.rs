//! The `slidescore` command line. Scoring commands talk to a service; without
//! `--server` an in-process one is started on a loopback port.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use base64::Engine;
use clap::{Args, Parser, Subcommand};
use futures::StreamExt;
use slidescore_client::Client;
use slidescore_core::api::{BatchLine, Pipeline, ScoreRequest, ScoreResponse};
use slidescore_core::collapse::{simulate_collapse, write_csv, write_scatter_jsonl, CollapseSimConfig};
use slidescore_core::metaeval::{metaeval, read_labels, read_predictions, render_table};
use slidescore_core::reward::ShapingConfig;
use slidescore_service::{start_with_chrome, RunningServer, ServiceConfig};
use thiserror::Error;

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_CONTENT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "slidescore", version, about = "Verifiable aesthetic layout metrics for HTML slides")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render and score one HTML file.
    Score(ScoreArgs),
    /// Score a directory of .html files or an NDJSON request file.
    Batch(BatchArgs),
    /// F1/F2/ROC-AUC of scored predictions against defect labels.
    Metaeval(MetaevalArgs),
    /// Monte Carlo correlation between the summed advantage and a dominant component.
    SimulateCollapse(CollapseArgs),
}

#[derive(Debug, Args)]
pub struct ServerArgs {
    /// Service URL; an embedded server is started when omitted.
    #[arg(long, env = "SLIDESCORE_SERVER")]
    pub server: Option<String>,
    /// Browser sessions for the embedded server.
    #[arg(long)]
    pub pool: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub file: PathBuf,
    #[arg(long, default_value = "full")]
    pub pipeline: Pipeline,
    /// Write the whitespace overlay PNG here.
    #[arg(long)]
    pub overlay: Option<PathBuf>,
    /// Print the full response as JSON.
    #[arg(long)]
    pub json: bool,
    /// Shaping TOML overriding the server's.
    #[arg(long)]
    pub shaping: Option<PathBuf>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[command(flatten)]
    pub server: ServerArgs,
}

#[derive(Debug, Args)]
pub struct BatchArgs {
    /// Directory of .html files (ids are file stems) or an NDJSON file of requests.
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Pipeline for directory input.
    #[arg(long, default_value = "full")]
    pub pipeline: Pipeline,
    #[arg(long)]
    pub shaping: Option<PathBuf>,
    #[command(flatten)]
    pub server: ServerArgs,
}

#[derive(Debug, Args)]
pub struct MetaevalArgs {
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub preds: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shaping used to turn metric reports into defect scores.
    #[arg(long)]
    pub shaping: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CollapseArgs {
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = 8)]
    pub g: usize,
    /// Dominant-to-other std ratios.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,5,10")]
    pub sigma_sweep: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_others: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSONL of per-rollout (A, z) pairs.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    pub scatter_trials: usize,
}

/// A request was served but the slide itself could not be rendered.
#[derive(Debug, Error)]
#[error("render failed: {0}")]
pub struct ContentFailure(pub String);

pub async fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Score(a) => score(a).await,
        Command::Batch(a) => batch(a).await,
        Command::Metaeval(a) => run_metaeval(a),
        Command::SimulateCollapse(a) => collapse(a),
    }
}

/// Parses arguments, runs, and maps the outcome onto the exit code.
pub async fn main_with_args(args: impl IntoIterator<Item = String>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<ContentFailure>() => {
            eprintln!("slidescore: {e}");
            ExitCode::from(EXIT_CONTENT)
        }
        Err(e) => {
            eprintln!("slidescore: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

struct Connection {
    client: Client,
    _embedded: Option<RunningServer>,
}

async fn connect(args: &ServerArgs) -> Result<Connection> {
    if let Some(url) = &args.server {
        return Ok(Connection { client: Client::new(url.clone()), _embedded: None });
    }
    let mut cfg = ServiceConfig::from_env().context("loading service configuration")?;
    cfg.addr = "127.0.0.1:0".parse().expect("literal address");
    if let Some(n) = args.pool {
        cfg.pool.size = n;
    }
    let server = start_with_chrome(cfg).await.context("starting the embedded server")?;
    Ok(Connection { client: Client::new(server.url()), _embedded: Some(server) })
}

fn load_shaping(path: &Option<PathBuf>) -> Result<Option<ShapingConfig>> {
    path.as_ref()
        .map(|p| ShapingConfig::load(p).with_context(|| format!("loading {}", p.display())))
        .transpose()
}

async fn score(a: ScoreArgs) -> Result<()> {
    let html = std::fs::read_to_string(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let id = a.file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut req = ScoreRequest::new(id, html);
    req.pipeline = a.pipeline;
    req.return_overlay = a.overlay.is_some();
    req.shaping = load_shaping(&a.shaping)?;
    req.timeout_ms = a.timeout_ms;

    let conn = connect(&a.server).await?;
    let resp = conn.client.score(&req).await?;
    if let (Some(path), Some(b64)) = (&a.overlay, &resp.overlay_png) {
        let png = base64::engine::general_purpose::STANDARD.decode(b64).context("decoding overlay")?;
        std::fs::write(path, png).with_context(|| format!("writing {}", path.display()))?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&resp)?);
    } else {
        print!("{}", summarize(&resp));
    }
    match resp.metric_report.render_error {
        Some(code) => Err(ContentFailure(code.to_string()).into()),
        None => Ok(()),
    }
}

pub fn summarize(r: &ScoreResponse) -> String {
    let m = &r.metric_report;
    let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
    let v = &r.reward_vector.components;
    let mut s = format!("{}\n", r.request_id);
    if let Some(code) = m.render_error {
        s += &format!("  render_error      {code}\n");
    }
    s += &format!("  aspect_ratio      {:<10} reward {:.4}\n", fmt(m.aspect_ratio), v[0]);
    s += &format!("  whitespace_ratio  {:<10} reward {:.4}\n", fmt(m.whitespace_ratio), v[1]);
    s += &format!("  collision_score   {:<10} reward {:.4}\n", fmt(m.collision_score), v[2]);
    s += &format!("  imbalance_d       {:<10} reward {:.4}\n", fmt(m.imbalance_d), v[3]);
    s += &format!("  total_ms          {:.0}\n", r.timings.total_ms);
    for w in &r.warnings {
        s += &format!("  warning: {w}\n");
    }
    s
}

/// Requests from a directory of `.html` files or an NDJSON request file.
pub fn load_batch(input: &Path, pipeline: Pipeline, shaping: Option<ShapingConfig>) -> Result<Vec<ScoreRequest>> {
    let mut reqs = Vec::new();
    if input.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(input)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("html") || x.eq_ignore_ascii_case("htm")))
            .collect();
        files.sort();
        for f in files {
            let html = std::fs::read_to_string(&f).with_context(|| format!("reading {}", f.display()))?;
            let id = f.file_stem().expect("file has a name").to_string_lossy().into_owned();
            let mut r = ScoreRequest::new(id, html);
            r.pipeline = pipeline;
            r.shaping = shaping.clone();
            reqs.push(r);
        }
    } else {
        let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let mut r: ScoreRequest =
                serde_json::from_str(line).with_context(|| format!("{}:{}", input.display(), i + 1))?;
            if r.shaping.is_none() {
                r.shaping = shaping.clone();
            }
            reqs.push(r);
        }
    }
    if reqs.is_empty() {
        bail!("no requests in {}", input.display());
    }
    Ok(reqs)
}

async fn batch(a: BatchArgs) -> Result<()> {
    let reqs = load_batch(&a.input, a.pipeline, load_shaping(&a.shaping)?)?;
    let total = reqs.len();
    let conn = connect(&a.server).await?;
    let mut out = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    let mut stream = Box::pin(conn.client.batch_stream(reqs).await?);
    let (mut scored, mut failed, mut rejected) = (0, 0, 0);
    while let Some(line) = stream.next().await {
        let line = line?;
        match &line {
            BatchLine::Score(s) if s.metric_report.render_error.is_some() => failed += 1,
            BatchLine::Score(_) => scored += 1,
            BatchLine::Error { .. } => rejected += 1,
        }
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    eprintln!("{total} requests: {scored} scored, {failed} render failures, {rejected} rejected -> {}", a.out.display());
    Ok(())
}

fn run_metaeval(a: MetaevalArgs) -> Result<()> {
    let shaping = load_shaping(&a.shaping)?.unwrap_or_default();
    let labels = read_labels(&a.labels)?;
    let preds = read_predictions(&a.preds, &shaping)?;
    let result = metaeval(&labels, &preds)?;
    print!("{}", render_table(&result));
    if let Some(out) = &a.out {
        std::fs::write(out, serde_json::to_string_pretty(&result)?).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn collapse(a: CollapseArgs) -> Result<()> {
    let cfg = CollapseSimConfig {
        k: a.k,
        g: a.g,
        sigma_others: a.sigma_others,
        sigma_dominant_sweep: a.sigma_sweep.iter().map(|r| r * a.sigma_others).collect(),
        trials: a.trials,
        seed: a.seed,
        scatter_trials: if a.scatter.is_some() { a.scatter_trials } else { 0 },
        ..Default::default()
    };
    let result = simulate_collapse(&cfg)?;
    match &a.out {
        Some(p) => write_csv(&result.points, BufWriter::new(File::create(p)?))?,
        None => write_csv(&result.points, std::io::stdout().lock())?,
    }
    if let Some(p) = &a.scatter {
        write_scatter_jsonl(&result.scatter, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}
