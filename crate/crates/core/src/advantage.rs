//! Group-relative advantages: sum-then-normalize (GRPO), per-component
//! normalization with batch renormalization (GDPO), and the variance-weight
//! decomposition that links the two.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AdvantageError {
    #[error("group needs at least 2 rollouts, got {0}")]
    TooFewRollouts(usize),
    #[error("group needs at least one reward component")]
    NoComponents,
    #[error("row {row} has {got} components, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("non-finite reward at row {row}, component {component}")]
    NonFinite { row: usize, component: usize },
    #[error("shape mismatch: group {group} has {got} components, expected {expected}")]
    ShapeMismatch { group: usize, got: usize, expected: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("degenerate group: summed reward has zero variance")]
    Degenerate,
    #[error("reconstruction error {0:e} exceeds tolerance")]
    Reconstruction(f64),
}

/// G rollouts × K reward components for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub group_id: String,
    rewards: Vec<Vec<f64>>,
}

impl RolloutGroup {
    pub fn new(group_id: impl Into<String>, rewards: Vec<Vec<f64>>) -> Result<Self, AdvantageError> {
        if rewards.len() < 2 {
            return Err(AdvantageError::TooFewRollouts(rewards.len()));
        }
        let k = rewards[0].len();
        if k == 0 {
            return Err(AdvantageError::NoComponents);
        }
        for (row, r) in rewards.iter().enumerate() {
            if r.len() != k {
                return Err(AdvantageError::RaggedRow { row, got: r.len(), expected: k });
            }
            if let Some(component) = r.iter().position(|v| !v.is_finite()) {
                return Err(AdvantageError::NonFinite { row, component });
            }
        }
        Ok(Self { group_id: group_id.into(), rewards })
    }

    pub fn rewards(&self) -> &[Vec<f64>] {
        &self.rewards
    }

    pub fn g(&self) -> usize {
        self.rewards.len()
    }

    pub fn k(&self) -> usize {
        self.rewards[0].len()
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rewards.iter().map(|r| r[k]).collect()
    }

    pub fn totals(&self) -> Vec<f64> {
        self.rewards.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Mean and population (1/G) standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn population_cov(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_std(a);
    let (mb, _) = mean_std(b);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / a.len() as f64
}

// Rounding in the mean leaves ~1e-17 residue on constant columns.
fn is_flat(mean: f64, std: f64) -> bool {
    std <= 1e-12 * mean.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoAdvantages {
    pub advantages: Vec<f64>,
    pub zero_variance: bool,
}

/// Sum the components per rollout, then z-normalize within the group.
///
/// A flat group gets all-zero advantages and `zero_variance = true`.
pub fn grpo_advantage(group: &RolloutGroup) -> GrpoAdvantages {
    let totals = group.totals();
    let (mean, std) = mean_std(&totals);
    if is_flat(mean, std) {
        return GrpoAdvantages { advantages: vec![0.0; totals.len()], zero_variance: true };
    }
    GrpoAdvantages {
        advantages: totals.iter().map(|r| (r - mean) / std).collect(),
        zero_variance: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdpoOutput {
    /// Batch-normalized advantage per rollout, grouped like the input.
    pub advantages: Vec<Vec<f64>>,
    /// Per-group sums of component z-scores, before batch normalization.
    pub group_sums: Vec<Vec<f64>>,
    pub discarded: Vec<bool>,
}

/// Per-component z-scores inside one group, `(r - mean) / (std + eps)`.
pub fn component_zscores(group: &RolloutGroup, epsilon: f64) -> Vec<Vec<f64>> {
    (0..group.k())
        .map(|k| {
            let col = group.column(k);
            let (mean, std) = mean_std(&col);
            col.iter().map(|r| (r - mean) / (std + epsilon)).collect()
        })
        .collect()
}

/// Reward-decoupled normalization followed by batch-wise z-normalization.
///
/// Groups whose components are all flat are discarded: they are left out of
/// the batch statistics and receive zero advantage.
pub fn gdpo_advantage(groups: &[RolloutGroup], epsilon: f64) -> Result<GdpoOutput, AdvantageError> {
    let first = groups.first().ok_or(AdvantageError::EmptyBatch)?;
    let k = first.k();
    if let Some((i, g)) = groups.iter().enumerate().find(|(_, g)| g.k() != k) {
        return Err(AdvantageError::ShapeMismatch { group: i, got: g.k(), expected: k });
    }

    let mut group_sums = Vec::with_capacity(groups.len());
    let mut discarded = Vec::with_capacity(groups.len());
    for g in groups {
        let flat = (0..k).all(|c| {
            let (m, s) = mean_std(&g.column(c));
            is_flat(m, s)
        });
        let z = component_zscores(g, epsilon);
        let sums: Vec<f64> = (0..g.g()).map(|j| z.iter().map(|col| col[j]).sum()).collect();
        group_sums.push(sums);
        discarded.push(flat);
    }

    let live: Vec<f64> = group_sums
        .iter()
        .zip(&discarded)
        .filter(|(_, d)| !**d)
        .flat_map(|(s, _)| s.iter().copied())
        .collect();
    let (mean, std) = if live.is_empty() { (0.0, 0.0) } else { mean_std(&live) };

    let advantages = group_sums
        .iter()
        .zip(&discarded)
        .map(|(sums, &d)| {
            if d {
                vec![0.0; sums.len()]
            } else {
                sums.iter().map(|a| (a - mean) / (std + epsilon)).collect()
            }
        })
        .collect();
    Ok(GdpoOutput { advantages, group_sums, discarded })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `w_k = std_k / std_R`; zero for flat components.
    pub weights: Vec<f64>,
    /// `z[j][k]`, the per-component z-score (no epsilon); zero for flat components.
    pub z: Vec<Vec<f64>>,
    pub degenerate_components: Vec<usize>,
    pub max_reconstruction_error: f64,
}

pub const RECONSTRUCTION_TOL: f64 = 1e-10;

/// Writes the GRPO advantage as a variance-weighted mixture of component
/// z-scores and checks `A_j = Σ_k w_k z_jk` against [`grpo_advantage`].
pub fn decompose_weights(group: &RolloutGroup) -> Result<Decomposition, AdvantageError> {
    let grpo = grpo_advantage(group);
    if grpo.zero_variance {
        return Err(AdvantageError::Degenerate);
    }
    let (_, std_r) = mean_std(&group.totals());
    let (g, k) = (group.g(), group.k());
    let mut weights = vec![0.0; k];
    let mut z = vec![vec![0.0; k]; g];
    let mut degenerate_components = Vec::new();
    for c in 0..k {
        let col = group.column(c);
        let (mean, std) = mean_std(&col);
        if is_flat(mean, std) {
            degenerate_components.push(c);
            continue;
        }
        weights[c] = std / std_r;
        for (j, r) in col.iter().enumerate() {
            z[j][c] = (r - mean) / std;
        }
    }
    let max_reconstruction_error = (0..g)
        .map(|j| {
            let mix: f64 = (0..k).map(|c| weights[c] * z[j][c]).sum();
            (grpo.advantages[j] - mix).abs()
        })
        .fold(0.0, f64::max);
    if max_reconstruction_error > RECONSTRUCTION_TOL {
        return Err(AdvantageError::Reconstruction(max_reconstruction_error));
    }
    Ok(Decomposition { weights, z, degenerate_components, max_reconstruction_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceSplit {
    pub total_variance: f64,
    pub component_variances: f64,
    pub cross_covariances: f64,
}

impl VarianceSplit {
    pub fn residual(&self) -> f64 {
        (self.total_variance - self.component_variances - 2.0 * self.cross_covariances).abs()
    }
}

/// `var(R) = Σ var_k + 2 Σ_{k<l} cov_kl` with population moments.
pub fn variance_split(group: &RolloutGroup) -> VarianceSplit {
    let (_, std_r) = mean_std(&group.totals());
    let cols: Vec<Vec<f64>> = (0..group.k()).map(|c| group.column(c)).collect();
    let component_variances = cols.iter().map(|c| mean_std(c).1.powi(2)).sum();
    let mut cross = 0.0;
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            cross += population_cov(&cols[a], &cols[b]);
        }
    }
    VarianceSplit { total_variance: std_r * std_r, component_variances, cross_covariances: cross }
}
