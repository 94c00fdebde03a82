//! Reward shaping: metric report -> per-component rewards in `[0, 1]`.
//!
//! Component order is fixed: aspect, whitespace, collision, imbalance.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COMPONENTS: usize = 4;
pub const COMPONENT_NAMES: [&str; COMPONENTS] = ["aspect", "whitespace", "collision", "imbalance"];
pub const TARGET_16_9: f64 = 16.0 / 9.0;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("aspect ratio must be positive, got {0}")]
    InvalidRatio(f64),
    #[error("lower threshold {lower} must be below upper threshold {upper}")]
    BadThresholds { lower: f64, upper: f64 },
    #[error("invalid shaping config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderErrorCode {
    Timeout,
    NavigationFailed,
    ProbeFailed,
    EmptyPage,
}

impl std::fmt::Display for RenderErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RenderErrorCode::Timeout => "timeout",
            RenderErrorCode::NavigationFailed => "navigation_failed",
            RenderErrorCode::ProbeFailed => "probe_failed",
            RenderErrorCode::EmptyPage => "empty_page",
        })
    }
}

/// Raw metric values for one slide.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub aspect_ratio: Option<f64>,
    pub whitespace_ratio: Option<f64>,
    pub collision_score: Option<f64>,
    pub imbalance_d: Option<f64>,
    pub render_error: Option<RenderErrorCode>,
}

impl MetricReport {
    pub fn failed(code: RenderErrorCode) -> Self {
        Self { render_error: Some(code), ..Default::default() }
    }

    pub fn is_complete(&self) -> bool {
        self.aspect_ratio.is_some()
            && self.whitespace_ratio.is_some()
            && self.collision_score.is_some()
            && self.imbalance_d.is_some()
    }
}

/// How a raw metric is placed on the axis its clip band is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Band applies to the raw metric; higher raw value is worse.
    Raw,
    /// Band applies to `1 - x` (e.g. content fraction); higher is better.
    Complement,
    /// Band applies to `exp(-x)` for unbounded scores; higher is better.
    ExpDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub orientation: Orientation,
}

impl Band {
    pub const fn new(lower: f64, upper: f64, orientation: Orientation) -> Self {
        Self { lower, upper, orientation }
    }

    /// Reward for a raw metric value under this band.
    pub fn reward(&self, raw: f64) -> Result<f64, RewardError> {
        match self.orientation {
            Orientation::Raw => smoothstep_reward(raw, self.lower, self.upper),
            Orientation::Complement => self.goodness_reward(1.0 - raw),
            Orientation::ExpDecay => self.goodness_reward((-raw).exp()),
        }
    }

    // Full reward at or above `upper`, none at or below `lower`. Evaluated as the
    // same smoothstep on the mirrored axis so both orientations share one formula.
    fn goodness_reward(&self, goodness: f64) -> Result<f64, RewardError> {
        smoothstep_reward(1.0 - goodness, 1.0 - self.upper, 1.0 - self.lower)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapingConfig {
    pub target: f64,
    pub alpha: f64,
    pub beta: f64,
    pub margin_m: f64,
    pub whitespace: Band,
    pub collision: Band,
    pub imbalance: Band,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            target: TARGET_16_9,
            alpha: 16.0,
            beta: 64.0,
            margin_m: 0.04,
            whitespace: Band::new(0.8, 0.995, Orientation::Complement),
            collision: Band::new(0.5, 0.998, Orientation::ExpDecay),
            imbalance: Band::new(0.1, 0.95, Orientation::ExpDecay),
        }
    }
}

impl ShapingConfig {
    /// Table values applied to the raw metrics exactly as printed (higher is worse).
    pub fn as_printed() -> Self {
        let mut cfg = Self::default();
        for band in [&mut cfg.whitespace, &mut cfg.collision, &mut cfg.imbalance] {
            band.orientation = Orientation::Raw;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if !(self.target > 0.0) {
            return Err(RewardError::InvalidConfig(format!("target = {}", self.target)));
        }
        if self.alpha < 0.0 || self.beta < 0.0 || self.margin_m < 0.0 {
            return Err(RewardError::InvalidConfig("alpha, beta and margin_m must be >= 0".into()));
        }
        for band in [&self.whitespace, &self.collision, &self.imbalance] {
            if !(band.lower < band.upper) {
                return Err(RewardError::BadThresholds { lower: band.lower, upper: band.upper });
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RewardError> {
        let cfg: ShapingConfig =
            toml::from_str(text).map_err(|e| RewardError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RewardError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RewardError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    pub components: [f64; COMPONENTS],
    pub valid: bool,
}

impl RewardVector {
    pub const fn invalid() -> Self {
        Self { components: [0.0; COMPONENTS], valid: false }
    }

    pub fn sum(&self) -> f64 {
        self.components.iter().sum()
    }
}

/// Asymmetric quadratic reward in log-ratio space; peaks at 1 when `x == target`
/// and adds the `beta` penalty once the page is narrower than `target` by more
/// than the margin.
pub fn aspect_reward(x: f64, config: &ShapingConfig) -> Result<f64, RewardError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(RewardError::InvalidRatio(x));
    }
    let dev = (x / config.target).ln();
    let narrow = (-dev - config.margin_m).max(0.0);
    Ok((-config.alpha * dev * dev - config.beta * narrow * narrow).exp())
}

/// `1` at or below `lower`, `0` at or above `upper`, cubic smoothstep between.
pub fn smoothstep_reward(x: f64, lower: f64, upper: f64) -> Result<f64, RewardError> {
    if !(lower < upper) {
        return Err(RewardError::BadThresholds { lower, upper });
    }
    if x <= lower {
        return Ok(1.0);
    }
    if x >= upper {
        return Ok(0.0);
    }
    // 3u^2 - 2u^3 in terms of s = u - 1/2.
    let s = ((lower + upper) / 2.0 - x) / (upper - lower);
    Ok(0.5 + 1.5 * s - 2.0 * s * s * s)
}

/// Shapes a report into the reward vector. Any render error zeroes every
/// component; a metric the pipeline did not measure scores 0.
pub fn compose_rewards(report: &MetricReport, config: &ShapingConfig) -> RewardVector {
    if report.render_error.is_some() {
        return RewardVector::invalid();
    }
    let aspect = report
        .aspect_ratio
        .and_then(|x| aspect_reward(x, config).ok())
        .unwrap_or(0.0);
    let band = |value: Option<f64>, band: &Band| {
        value
            .filter(|v| v.is_finite())
            .and_then(|v| band.reward(v).ok())
            .unwrap_or(0.0)
    };
    RewardVector {
        components: [
            aspect,
            band(report.whitespace_ratio, &config.whitespace),
            band(report.collision_score, &config.collision),
            band(report.imbalance_d, &config.imbalance),
        ],
        valid: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratio_at(log_dev: f64) -> f64 {
        TARGET_16_9 * log_dev.exp()
    }

    #[test]
    fn aspect_reward_examples() {
        let cfg = ShapingConfig::default();
        assert_eq!(aspect_reward(TARGET_16_9, &cfg).unwrap(), 1.0);
        let wide = aspect_reward(ratio_at(0.1), &cfg).unwrap();
        assert!((wide - (-0.16f64).exp()).abs() < 1e-12);
        assert!((wide - 0.8521).abs() < 1e-4);
        let tall = aspect_reward(ratio_at(-0.1), &cfg).unwrap();
        assert!((tall - (-0.3904f64).exp()).abs() < 1e-12);
        assert!((tall - 0.6768).abs() < 1e-4);
    }

    #[test]
    fn aspect_reward_rejects_nonpositive() {
        let cfg = ShapingConfig::default();
        assert_eq!(aspect_reward(0.0, &cfg), Err(RewardError::InvalidRatio(0.0)));
        assert!(aspect_reward(-1.0, &cfg).is_err());
        assert!(aspect_reward(f64::NAN, &cfg).is_err());
    }

    #[test]
    fn smoothstep_examples() {
        assert_eq!(smoothstep_reward(0.2, 0.2, 0.8).unwrap(), 1.0);
        assert_eq!(smoothstep_reward(0.8, 0.2, 0.8).unwrap(), 0.0);
        assert_eq!(smoothstep_reward(0.5, 0.2, 0.8).unwrap(), 0.5);
        assert_eq!(
            smoothstep_reward(0.5, 0.8, 0.8),
            Err(RewardError::BadThresholds { lower: 0.8, upper: 0.8 })
        );
    }

    #[test]
    fn render_error_zeroes_everything() {
        let report = MetricReport {
            aspect_ratio: Some(TARGET_16_9),
            render_error: Some(RenderErrorCode::Timeout),
            ..Default::default()
        };
        let r = compose_rewards(&report, &ShapingConfig::default());
        assert_eq!(r, RewardVector::invalid());
    }

    #[test]
    fn perfect_report_scores_one_everywhere() {
        let report = MetricReport {
            aspect_ratio: Some(TARGET_16_9),
            whitespace_ratio: Some(0.0),
            collision_score: Some(0.0),
            imbalance_d: Some(0.0),
            render_error: None,
        };
        let r = compose_rewards(&report, &ShapingConfig::default());
        assert!(r.valid);
        assert_eq!(r.components, [1.0; 4]);
    }

    #[test]
    fn band_midpoints_compose_to_half() {
        let cfg = ShapingConfig::default();
        let mid = |b: &Band| (b.lower + b.upper) / 2.0;
        let report = MetricReport {
            aspect_ratio: Some(ratio_at(0.1)),
            whitespace_ratio: Some(1.0 - mid(&cfg.whitespace)),
            collision_score: Some(-mid(&cfg.collision).ln()),
            imbalance_d: Some(-mid(&cfg.imbalance).ln()),
            render_error: None,
        };
        let r = compose_rewards(&report, &cfg);
        assert!((r.components[0] - 0.8521).abs() < 1e-4);
        for c in &r.components[1..] {
            assert!((c - 0.5).abs() < 1e-9, "{c}");
        }
    }

    #[test]
    fn as_printed_orientation_uses_raw_values() {
        let cfg = ShapingConfig::as_printed();
        let report = MetricReport {
            aspect_ratio: Some(TARGET_16_9),
            whitespace_ratio: Some(0.8),
            collision_score: Some(0.998),
            imbalance_d: Some(0.525),
            render_error: None,
        };
        let r = compose_rewards(&report, &cfg);
        assert_eq!(r.components[1], 1.0);
        assert_eq!(r.components[2], 0.0);
        assert!((r.components[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unmeasured_component_scores_zero() {
        let report = MetricReport { aspect_ratio: Some(TARGET_16_9), ..Default::default() };
        let r = compose_rewards(&report, &ShapingConfig::default());
        assert!(r.valid);
        assert_eq!(r.components, [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let text = r#"
            alpha = 8.0
            [whitespace]
            lower = 0.7
            upper = 0.99
            orientation = "raw"
        "#;
        let cfg = ShapingConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.alpha, 8.0);
        assert_eq!(cfg.beta, 64.0);
        assert_eq!(cfg.whitespace, Band::new(0.7, 0.99, Orientation::Raw));
        let bad = "[collision]\nlower = 0.9\nupper = 0.1\norientation = \"raw\"\n";
        assert!(matches!(ShapingConfig::from_toml_str(bad), Err(RewardError::BadThresholds { .. })));
    }
}
