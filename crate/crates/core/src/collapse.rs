//! Monte Carlo reward-collapse simulator: how strongly one high-variance
//! component drives the sum-then-normalize advantage.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advantage::mean_std;

#[derive(Debug, Error)]
pub enum CollapseError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollapseSimConfig {
    pub k: usize,
    pub g: usize,
    pub sigma_others: f64,
    pub sigma_dominant_sweep: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Trials per independently seeded substream.
    pub chunk_trials: usize,
    /// Trials per sweep point whose `(A, z)` pairs are kept for plotting.
    pub scatter_trials: usize,
}

impl Default for CollapseSimConfig {
    fn default() -> Self {
        Self {
            k: 4,
            g: 8,
            sigma_others: 1.0,
            sigma_dominant_sweep: vec![1.0, 2.0, 3.0, 5.0, 10.0],
            trials: 100_000,
            seed: 0,
            chunk_trials: 1_000,
            scatter_trials: 0,
        }
    }
}

impl CollapseSimConfig {
    pub fn validate(&self) -> Result<(), CollapseError> {
        let bad = |m: &str| Err(CollapseError::InvalidConfig(m.into()));
        if self.k < 1 {
            return bad("k must be >= 1");
        }
        if self.g < 2 {
            return bad("g must be >= 2");
        }
        if self.trials < 1 || self.chunk_trials < 1 {
            return bad("trials and chunk_trials must be >= 1");
        }
        if !(self.sigma_others > 0.0) || self.sigma_dominant_sweep.iter().any(|s| !(*s > 0.0)) {
            return bad("all sigmas must be > 0");
        }
        if self.sigma_dominant_sweep.is_empty() {
            return bad("empty sigma sweep");
        }
        Ok(())
    }

    /// `σ_m / sqrt(Σ σ_l²)` for independent components.
    pub fn analytic_corr(&self, sigma_dominant: f64) -> f64 {
        let others = (self.k - 1) as f64 * self.sigma_others.powi(2);
        sigma_dominant / (sigma_dominant.powi(2) + others).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapsePoint {
    pub sigma_ratio: f64,
    pub mean_corr: f64,
    pub stderr: f64,
    pub trials: usize,
    pub analytic_corr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub sigma_ratio: f64,
    pub trial: usize,
    pub a: f64,
    pub z_dominant: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub points: Vec<CollapsePoint>,
    pub scatter: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    sa: f64,
    sz: f64,
    saa: f64,
    szz: f64,
    saz: f64,
}

impl Moments {
    fn push(&mut self, a: f64, z: f64) {
        self.n += 1.0;
        self.sa += a;
        self.sz += z;
        self.saa += a * a;
        self.szz += z * z;
        self.saz += a * z;
    }

    fn merge(mut self, o: Moments) -> Moments {
        self.n += o.n;
        self.sa += o.sa;
        self.sz += o.sz;
        self.saa += o.saa;
        self.szz += o.szz;
        self.saz += o.saz;
        self
    }

    fn corr(&self) -> f64 {
        let cov = self.saz / self.n - (self.sa / self.n) * (self.sz / self.n);
        let va = self.saa / self.n - (self.sa / self.n).powi(2);
        let vz = self.szz / self.n - (self.sz / self.n).powi(2);
        cov / (va * vz).sqrt()
    }
}

struct ChunkOut {
    point: usize,
    moments: Moments,
    scatter: Vec<ScatterPoint>,
}

fn run_chunk(cfg: &CollapseSimConfig, point: usize, chunk: usize) -> ChunkOut {
    let sigma_m = cfg.sigma_dominant_sweep[point];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((point as u64) << 32) | chunk as u64);
    let dominant = Normal::new(0.0, sigma_m).expect("validated sigma");
    let other = Normal::new(0.0, cfg.sigma_others).expect("validated sigma");

    let first = chunk * cfg.chunk_trials;
    let last = (first + cfg.chunk_trials).min(cfg.trials);
    let mut moments = Moments::default();
    let mut scatter = Vec::new();
    let mut r_dom = vec![0.0; cfg.g];
    let mut totals = vec![0.0; cfg.g];
    for trial in first..last {
        for j in 0..cfg.g {
            let d = dominant.sample(&mut rng);
            let rest: f64 = (1..cfg.k).map(|_| other.sample(&mut rng)).sum();
            r_dom[j] = d;
            totals[j] = d + rest;
        }
        let (mr, sr) = mean_std(&totals);
        let (md, sd) = mean_std(&r_dom);
        if sr == 0.0 || sd == 0.0 {
            continue;
        }
        for j in 0..cfg.g {
            let a = (totals[j] - mr) / sr;
            let z = (r_dom[j] - md) / sd;
            moments.push(a, z);
            if trial < cfg.scatter_trials {
                scatter.push(ScatterPoint { sigma_ratio: sigma_m / cfg.sigma_others, trial, a, z_dominant: z });
            }
        }
    }
    ChunkOut { point, moments, scatter }
}

/// Sweeps the dominant component's std and reports the pooled Pearson
/// correlation between the GRPO advantage and that component's z-score.
///
/// Each `(point, chunk)` pair has its own ChaCha8 stream, so output does not
/// depend on thread scheduling.
pub fn simulate_collapse(cfg: &CollapseSimConfig) -> Result<CollapseResult, CollapseError> {
    cfg.validate()?;
    let chunks = cfg.trials.div_ceil(cfg.chunk_trials);
    let jobs: Vec<(usize, usize)> = (0..cfg.sigma_dominant_sweep.len())
        .flat_map(|p| (0..chunks).map(move |c| (p, c)))
        .collect();
    let outs: Vec<ChunkOut> = jobs.par_iter().map(|&(p, c)| run_chunk(cfg, p, c)).collect();

    let mut result = CollapseResult::default();
    for (p, &sigma_m) in cfg.sigma_dominant_sweep.iter().enumerate() {
        let mine: Vec<&ChunkOut> = outs.iter().filter(|o| o.point == p).collect();
        let pooled = mine.iter().fold(Moments::default(), |acc, o| acc.merge(o.moments));
        let chunk_corrs: Vec<f64> = mine.iter().map(|o| o.moments.corr()).collect();
        let stderr = if chunk_corrs.len() > 1 {
            let (_, sd) = mean_std(&chunk_corrs);
            let n = chunk_corrs.len() as f64;
            sd * (n / (n - 1.0)).sqrt() / n.sqrt()
        } else {
            0.0
        };
        result.points.push(CollapsePoint {
            sigma_ratio: sigma_m / cfg.sigma_others,
            mean_corr: pooled.corr(),
            stderr,
            trials: cfg.trials,
            analytic_corr: cfg.analytic_corr(sigma_m),
        });
        result.scatter.extend(mine.iter().flat_map(|o| o.scatter.iter().copied()));
    }
    Ok(result)
}

pub fn write_csv<W: Write>(points: &[CollapsePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "sigma_ratio,mean_corr,stderr,trials")?;
    for p in points {
        writeln!(out, "{},{:.6},{:.6},{}", p.sigma_ratio, p.mean_corr, p.stderr, p.trials)?;
    }
    Ok(())
}

pub fn write_scatter_jsonl<W: Write>(scatter: &[ScatterPoint], mut out: W) -> std::io::Result<()> {
    for s in scatter {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
