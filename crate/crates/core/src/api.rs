//! JSON wire types shared by the scoring service and its clients.

use serde::{Deserialize, Serialize};

use crate::reward::{MetricReport, RewardVector, ShapingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Aspect,
    Whitespace,
    Geometry,
    #[default]
    Full,
}

impl Pipeline {
    pub fn measures_aspect(self) -> bool {
        matches!(self, Pipeline::Aspect | Pipeline::Full)
    }

    pub fn measures_whitespace(self) -> bool {
        matches!(self, Pipeline::Whitespace | Pipeline::Full)
    }

    pub fn measures_geometry(self) -> bool {
        matches!(self, Pipeline::Geometry | Pipeline::Full)
    }
}

impl std::str::FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aspect" => Ok(Pipeline::Aspect),
            "whitespace" => Ok(Pipeline::Whitespace),
            "geometry" => Ok(Pipeline::Geometry),
            "full" => Ok(Pipeline::Full),
            other => Err(format!("unknown pipeline {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub html: String,
    #[serde(default)]
    pub pipeline: Pipeline,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shaping: Option<ShapingConfig>,
    #[serde(default)]
    pub return_overlay: bool,
    /// Filled in by the server when empty.
    #[serde(default)]
    pub request_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viewport_width_px: Option<u32>,
}

impl ScoreRequest {
    pub fn new(request_id: impl Into<String>, html: impl Into<String>) -> Self {
        Self {
            html: html.into(),
            pipeline: Pipeline::Full,
            shaping: None,
            return_overlay: false,
            request_id: request_id.into(),
            timeout_ms: None,
            viewport_width_px: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub render_ms: f64,
    pub metric_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSize {
    pub width_px: u32,
    pub height_px: u32,
    /// The content extent was outside the viewport clamp.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub request_id: String,
    pub metric_report: MetricReport,
    pub reward_vector: RewardVector,
    pub timings: Timings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measured: Option<MeasuredSize>,
    /// Base64 PNG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_png: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub message: String,
}

/// One line of a batch response: either a score or an embedded error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatchLine {
    Score(Box<ScoreResponse>),
    Error { request_id: String, error: ErrorBody },
}

impl BatchLine {
    pub fn request_id(&self) -> &str {
        match self {
            BatchLine::Score(s) => &s.request_id,
            BatchLine::Error { request_id, .. } => request_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub pool_size: usize,
    pub sessions_alive: usize,
    pub sessions_busy: usize,
    pub queue_depth: usize,
    pub queue_bound: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_defaults() {
        let r: ScoreRequest = serde_json::from_str(r#"{"html":"<p>x</p>"}"#).unwrap();
        assert_eq!(r.pipeline, Pipeline::Full);
        assert!(!r.return_overlay && r.request_id.is_empty());
    }

    #[test]
    fn batch_lines_are_distinguishable() {
        let e: BatchLine =
            serde_json::from_str(r#"{"request_id":"a","error":{"status":400,"message":"empty html"}}"#).unwrap();
        assert!(matches!(e, BatchLine::Error { .. }));
        assert_eq!(e.request_id(), "a");
    }
}
