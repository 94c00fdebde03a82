//! Wire types for the in-page probe and the layout snapshot built from it.
//!
//! Field names are part of the JSON contract with the probe script and must
//! not be renamed.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::geometry::{BBox, Canvas};

pub const DEFAULT_MAX_NODES: usize = 5000;
pub const CLASS_HINT_MAX_CHARS: usize = 256;

#[derive(Debug, Error, PartialEq)]
pub enum SnapshotError {
    #[error("malformed probe payload: {0}")]
    Malformed(String),
    #[error("node {index}: {reason}")]
    InvalidNode { index: usize, reason: String },
    #[error("invalid page extent: {0}")]
    InvalidExtent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageExtent {
    pub content_height_px: i64,
    pub viewport_width_px: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionMode {
    Static,
    Relative,
    Absolute,
    Fixed,
    Sticky,
}

/// CSS `z-index`: either `auto` or an integer. Serialized as `"auto"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZIndex {
    #[default]
    Auto,
    Value(i64),
}

impl Serialize for ZIndex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ZIndex::Auto => s.serialize_str("auto"),
            ZIndex::Value(v) => s.serialize_i64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ZIndex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(ZIndex::Value(v)),
            Repr::Text(s) if s == "auto" => Ok(ZIndex::Auto),
            Repr::Text(s) => s
                .trim()
                .parse()
                .map(ZIndex::Value)
                .map_err(|_| serde::de::Error::custom(format!("bad z_index {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawNode {
    pub node_index: usize,
    pub parent_index: Option<usize>,
    pub tag_name: String,
    pub bbox: BBox,
    pub visible: bool,
    pub opacity: f64,
    pub position_mode: PositionMode,
    pub z_index: ZIndex,
    pub has_visible_text: bool,
    pub is_image_like: bool,
    pub is_svg_primitive: bool,
    pub background_is_transparent: bool,
    pub class_hint: String,
}

impl RawNode {
    /// A visible, opaque, static node with no style flags set. Handy for fixtures.
    pub fn element(node_index: usize, parent_index: Option<usize>, tag: &str, bbox: BBox) -> Self {
        Self {
            node_index,
            parent_index,
            tag_name: tag.to_string(),
            bbox,
            visible: true,
            opacity: 1.0,
            position_mode: PositionMode::Static,
            z_index: ZIndex::Auto,
            has_visible_text: false,
            is_image_like: false,
            is_svg_primitive: false,
            background_is_transparent: true,
            class_hint: String::new(),
        }
    }
}

/// The JSON object returned by the in-page probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePayload {
    pub page_extent: PageExtent,
    pub nodes: Vec<RawNode>,
    pub probe_version: String,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default)]
    pub skipped_frames: u32,
    #[serde(default)]
    pub skipped_shadow_roots: u32,
    #[serde(default)]
    pub error: Option<String>,
}

impl ProbePayload {
    pub fn from_json(json: &str) -> Result<Self, SnapshotError> {
        let payload: ProbePayload =
            serde_json::from_str(json).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        payload.validate()?;
        Ok(payload)
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self, SnapshotError> {
        let payload: ProbePayload =
            serde_json::from_value(value).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        payload.validate()?;
        Ok(payload)
    }

    pub fn validate(&self) -> Result<(), SnapshotError> {
        if self.page_extent.content_height_px < 0 {
            return Err(SnapshotError::InvalidExtent(format!(
                "content_height_px = {}",
                self.page_extent.content_height_px
            )));
        }
        if self.page_extent.viewport_width_px <= 0 {
            return Err(SnapshotError::InvalidExtent(format!(
                "viewport_width_px = {}",
                self.page_extent.viewport_width_px
            )));
        }
        validate_nodes(&self.nodes)
    }
}

/// Checks the pre-order forest invariants in one pass.
pub fn validate_nodes(nodes: &[RawNode]) -> Result<(), SnapshotError> {
    // Ancestors of the previous node; in pre-order a parent must be one of them.
    let mut open: Vec<usize> = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let bad = |reason: String| SnapshotError::InvalidNode { index: i, reason };
        if node.node_index != i {
            return Err(bad(format!("node_index {} out of order", node.node_index)));
        }
        match node.parent_index {
            Some(p) if p >= i => {
                return Err(bad(format!("parent_index {p} does not precede node")));
            }
            Some(p) => {
                while open.last().is_some_and(|&top| top != p) {
                    open.pop();
                }
                if open.is_empty() {
                    return Err(bad(format!("parent_index {p} breaks pre-order")));
                }
            }
            None => open.clear(),
        }
        open.push(i);
        if !node.bbox.is_finite() {
            return Err(bad("non-finite bbox".into()));
        }
        if node.bbox.w < 0.0 || node.bbox.h < 0.0 {
            return Err(bad("negative bbox size".into()));
        }
        if !(0.0..=1.0).contains(&node.opacity) {
            return Err(bad(format!("opacity {} outside [0,1]", node.opacity)));
        }
    }
    Ok(())
}

/// Page geometry as seen by the metric code: canvas plus the probed element forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSnapshot {
    pub canvas: Canvas,
    pub nodes: Vec<RawNode>,
    pub truncated: bool,
}

impl LayoutSnapshot {
    pub fn new(canvas: Canvas, nodes: Vec<RawNode>) -> Result<Self, SnapshotError> {
        validate_nodes(&nodes)?;
        Ok(Self { canvas, nodes, truncated: false })
    }

    pub fn from_probe(payload: ProbePayload, canvas: Canvas) -> Self {
        Self { canvas, nodes: payload.nodes, truncated: payload.truncated }
    }

    pub fn from_json(json: &str) -> Result<Self, SnapshotError> {
        let snap: LayoutSnapshot =
            serde_json::from_str(json).map_err(|e| SnapshotError::Malformed(e.to_string()))?;
        validate_nodes(&snap.nodes)?;
        Ok(snap)
    }

    /// Exclusive end of each node's pre-order subtree: node `j` descends from
    /// `i` iff `i < j < span_end[i]`.
    pub fn subtree_ends(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut end: Vec<usize> = (1..=n).collect();
        for i in (0..n).rev() {
            if let Some(p) = self.nodes[i].parent_index {
                end[p] = end[p].max(end[i]);
            }
        }
        end
    }
}
