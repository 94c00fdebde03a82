//! Geometry metrics over a layout snapshot: visual units, collision events,
//! visual-centroid imbalance and aspect-ratio compliance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BBox, Canvas};
use crate::snapshot::LayoutSnapshot;

#[derive(Debug, Error, PartialEq)]
pub enum DomError {
    #[error("layout has no non-exempt visual units")]
    NoContent,
}

const NON_SEMANTIC_TAGS: &[&str] = &[
    "html", "head", "body", "script", "style", "meta", "link", "title", "noscript", "template",
    "base", "br", "wbr",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Text,
    Image,
    Container,
    Vector,
    Other,
}

impl UnitKind {
    fn is_main_content(self) -> bool {
        matches!(self, UnitKind::Text | UnitKind::Image)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualUnit {
    pub unit_id: usize,
    pub source_node: usize,
    pub bbox: BBox,
    pub area_px2: f64,
    pub kind: UnitKind,
    pub exempt: bool,
    /// Exclusive pre-order end of the source node's subtree.
    pub span_end: usize,
    /// Nearest ancestor unit of kind `Container`.
    pub container: Option<usize>,
}

impl VisualUnit {
    /// Ancestor/descendant relation in the node forest.
    pub fn is_related(&self, other: &VisualUnit) -> bool {
        let (a, b) = (self, other);
        (a.source_node < b.source_node && b.source_node < a.span_end)
            || (b.source_node < a.source_node && a.source_node < b.span_end)
    }
}

/// Toggles for the exemption heuristics (watermarks, weak backgrounds, corner badges).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExemptionRules {
    pub class_patterns_enabled: bool,
    pub class_patterns: Vec<String>,
    pub weak_transparent_enabled: bool,
    pub weak_opacity_below: f64,
    pub corner_badge_enabled: bool,
    pub corner_area_frac: f64,
    pub corner_zone_frac: f64,
}

impl Default for ExemptionRules {
    fn default() -> Self {
        Self {
            class_patterns_enabled: true,
            class_patterns: ["watermark", "badge", "annotation", "ribbon", "corner-tag"]
                .map(String::from)
                .to_vec(),
            weak_transparent_enabled: true,
            weak_opacity_below: 0.2,
            corner_badge_enabled: true,
            corner_area_frac: 0.002,
            corner_zone_frac: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitFilter {
    pub min_opacity: f64,
    pub min_area_px2: f64,
    pub exemptions: ExemptionRules,
}

impl Default for UnitFilter {
    fn default() -> Self {
        Self { min_opacity: 0.05, min_area_px2: 16.0, exemptions: ExemptionRules::default() }
    }
}

/// Filters the probed node forest down to perceptual units.
pub fn extract_visual_units(snapshot: &LayoutSnapshot, filter: &UnitFilter) -> Vec<VisualUnit> {
    let nodes = &snapshot.nodes;
    let span_end = snapshot.subtree_ends();
    let mut child_count = vec![0usize; nodes.len()];
    for n in nodes {
        if let Some(p) = n.parent_index {
            child_count[p] += 1;
        }
    }

    // Nodes strictly inside an <svg> never become units.
    let mut inside_svg = vec![false; nodes.len()];
    for (i, n) in nodes.iter().enumerate() {
        if let Some(p) = n.parent_index {
            inside_svg[i] = inside_svg[p] || nodes[p].tag_name.eq_ignore_ascii_case("svg");
        }
    }

    let mut unit_of_node: Vec<Option<usize>> = vec![None; nodes.len()];
    let mut units = Vec::new();
    for (i, n) in nodes.iter().enumerate() {
        let tag = n.tag_name.to_ascii_lowercase();
        if !n.visible
            || n.opacity < filter.min_opacity
            || NON_SEMANTIC_TAGS.contains(&tag.as_str())
            || n.is_svg_primitive
            || inside_svg[i]
            || n.bbox.w <= 0.0
            || n.bbox.h <= 0.0
            || n.bbox.area() < filter.min_area_px2
        {
            continue;
        }
        let kind = if tag == "svg" {
            UnitKind::Vector
        } else if n.is_image_like {
            UnitKind::Image
        } else if n.has_visible_text {
            UnitKind::Text
        } else if child_count[i] > 0 {
            UnitKind::Container
        } else {
            UnitKind::Other
        };

        let mut container = None;
        let mut p = n.parent_index;
        while let Some(pi) = p {
            if let Some(u) = unit_of_node[pi] {
                let parent_unit: &VisualUnit = &units[u];
                if parent_unit.kind == UnitKind::Container {
                    container = Some(u);
                    break;
                }
            }
            p = nodes[pi].parent_index;
        }

        let unit_id = units.len();
        unit_of_node[i] = Some(unit_id);
        units.push(VisualUnit {
            unit_id,
            source_node: i,
            bbox: n.bbox,
            area_px2: n.bbox.area(),
            kind,
            exempt: is_exempt(n, snapshot.canvas, &filter.exemptions),
            span_end: span_end[i],
            container,
        });
    }
    units
}

fn is_exempt(node: &crate::snapshot::RawNode, canvas: Canvas, rules: &ExemptionRules) -> bool {
    if rules.class_patterns_enabled {
        let hint = node.class_hint.to_ascii_lowercase();
        if rules.class_patterns.iter().any(|p| !p.is_empty() && hint.contains(&p.to_ascii_lowercase())) {
            return true;
        }
    }
    if rules.weak_transparent_enabled
        && node.background_is_transparent
        && node.opacity < rules.weak_opacity_below
    {
        return true;
    }
    if rules.corner_badge_enabled && !canvas.is_empty() {
        let small = node.bbox.area() < rules.corner_area_frac * canvas.area();
        let (cx, cy) = node.bbox.center();
        let fx = cx / canvas.width_px as f64;
        let fy = cy / canvas.height_px as f64;
        let z = rules.corner_zone_frac;
        let in_corner = (fx < z || fx > 1.0 - z) && (fy < z || fy > 1.0 - z);
        if small && in_corner {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionKind {
    Overlap,
    ParentEscape,
    CanvasOverflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    pub unit_a: usize,
    pub unit_b: Option<usize>,
    /// Overlap area (overlap), area outside the parent (escape) or off-canvas area (overflow).
    pub overlap_area_px2: f64,
    /// Denominator for the severity ratio: smaller unit (overlap) or the unit itself.
    pub reference_area_px2: f64,
    pub severity_weight: f64,
}

impl CollisionEvent {
    pub fn severity_ratio(&self) -> f64 {
        if self.reference_area_px2 <= 0.0 {
            return 1.0;
        }
        (self.overlap_area_px2 / self.reference_area_px2).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionWeights {
    pub overlap: f64,
    pub parent_escape: f64,
    pub canvas_overflow: f64,
}

impl Default for CollisionWeights {
    fn default() -> Self {
        Self { overlap: 1.0, parent_escape: 0.5, canvas_overflow: 1.5 }
    }
}

impl CollisionWeights {
    pub fn for_kind(&self, kind: CollisionKind) -> f64 {
        match kind {
            CollisionKind::Overlap => self.overlap,
            CollisionKind::ParentEscape => self.parent_escape,
            CollisionKind::CanvasOverflow => self.canvas_overflow,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionConfig {
    pub min_overlap_px2: f64,
    pub min_overlap_frac: f64,
    pub slack_px: f64,
    pub weights: CollisionWeights,
}

impl Default for CollisionConfig {
    fn default() -> Self {
        Self { min_overlap_px2: 64.0, min_overlap_frac: 0.02, slack_px: 2.0, weights: Default::default() }
    }
}

/// Finds overlap, parent-escape and canvas-overflow events between units.
///
/// Events come out sorted by `(kind, unit_a, unit_b)`.
pub fn detect_collisions(
    units: &[VisualUnit],
    canvas: Canvas,
    config: &CollisionConfig,
) -> Vec<CollisionEvent> {
    let mut events = Vec::new();
    let weight = |k| config.weights.for_kind(k);

    // Overlaps: sweep on x so disjoint columns are skipped cheaply.
    let mut order: Vec<usize> = (0..units.len()).collect();
    order.sort_by(|&a, &b| units[a].bbox.x.total_cmp(&units[b].bbox.x));
    for (pos, &i) in order.iter().enumerate() {
        let a = &units[i];
        for &j in &order[pos + 1..] {
            let b = &units[j];
            if b.bbox.x >= a.bbox.right() {
                break;
            }
            if a.is_related(b) || suppressed_pair(a, b) {
                continue;
            }
            let inter = a.bbox.intersection_area(&b.bbox);
            let smaller = a.area_px2.min(b.area_px2);
            if inter > config.min_overlap_px2.max(config.min_overlap_frac * smaller) {
                let (lo, hi) = if a.unit_id < b.unit_id { (a, b) } else { (b, a) };
                events.push(CollisionEvent {
                    kind: CollisionKind::Overlap,
                    unit_a: lo.unit_id,
                    unit_b: Some(hi.unit_id),
                    overlap_area_px2: inter,
                    reference_area_px2: smaller,
                    severity_weight: weight(CollisionKind::Overlap),
                });
            }
        }
    }

    let bounds = canvas.bounds();
    for u in units.iter().filter(|u| !u.exempt) {
        if let Some(c) = u.container {
            let parent = &units[c];
            let outside = u.bbox.area_outside(&parent.bbox);
            if u.bbox.protrusion_beyond(&parent.bbox) > config.slack_px && outside > 0.0 {
                events.push(CollisionEvent {
                    kind: CollisionKind::ParentEscape,
                    unit_a: u.unit_id,
                    unit_b: Some(c),
                    overlap_area_px2: outside,
                    reference_area_px2: u.area_px2,
                    severity_weight: weight(CollisionKind::ParentEscape),
                });
            }
        }
        let off = u.bbox.area_outside(&bounds);
        if u.bbox.protrusion_beyond(&bounds) > config.slack_px && off > 0.0 {
            events.push(CollisionEvent {
                kind: CollisionKind::CanvasOverflow,
                unit_a: u.unit_id,
                unit_b: None,
                overlap_area_px2: off,
                reference_area_px2: u.area_px2,
                severity_weight: weight(CollisionKind::CanvasOverflow),
            });
        }
    }

    events.sort_by_key(|x| (x.kind, x.unit_a, x.unit_b));
    events
}

// Exempt decorations only count when they sit on top of text or images.
fn suppressed_pair(a: &VisualUnit, b: &VisualUnit) -> bool {
    match (a.exempt, b.exempt) {
        (true, true) => true,
        (true, false) => !b.kind.is_main_content(),
        (false, true) => !a.kind.is_main_content(),
        (false, false) => false,
    }
}

/// Weighted sum of per-event severities, each capped at 1.
pub fn collision_score(events: &[CollisionEvent], weights: &CollisionWeights) -> f64 {
    events.iter().fold(0.0, |acc, e| acc + weights.for_kind(e.kind) * e.severity_ratio())
}

/// Area-weighted centroid of the non-exempt units, normalized to `[0,1]²`.
///
/// Container units that fully enclose two or more other units are left out of
/// the weighting so nested content is not counted twice.
pub fn visual_centroid(units: &[VisualUnit], canvas: Canvas) -> Result<(f64, f64), DomError> {
    let content: Vec<&VisualUnit> = units.iter().filter(|u| !u.exempt).collect();
    if content.is_empty() || canvas.is_empty() {
        return Err(DomError::NoContent);
    }
    let encloses_many = |c: &VisualUnit| {
        c.kind == UnitKind::Container
            && content
                .iter()
                .filter(|o| o.unit_id != c.unit_id && c.bbox.contains(&o.bbox))
                .nth(1)
                .is_some()
    };
    let mut weighted: Vec<&VisualUnit> = content.iter().copied().filter(|u| !encloses_many(u)).collect();
    if weighted.is_empty() {
        weighted = content;
    }
    let total: f64 = weighted.iter().map(|u| u.area_px2).sum();
    let (sx, sy) = weighted.iter().fold((0.0, 0.0), |(sx, sy), u| {
        let (cx, cy) = u.bbox.center();
        (sx + u.area_px2 * cx, sy + u.area_px2 * cy)
    });
    let x = (sx / total / canvas.width_px as f64).clamp(0.0, 1.0);
    let y = (sy / total / canvas.height_px as f64).clamp(0.0, 1.0);
    Ok((x, y))
}

pub const DEFAULT_X_TOL: f64 = 0.05;
pub const DEFAULT_Y_TOL: f64 = 0.15;

/// Ellipse-normalized distance of the centroid from the canvas center.
pub fn imbalance_distance(centroid: (f64, f64), x_tol: f64, y_tol: f64) -> f64 {
    let dx = (centroid.0 - 0.5) / x_tol;
    let dy = (centroid.1 - 0.5) / y_tol;
    (dx * dx + dy * dy).sqrt()
}

/// Whether `width / height` is within a relative `tolerance` of 16:9.
pub fn aspect_compliance(width_px: f64, height_px: f64, tolerance: f64) -> bool {
    let ratio = width_px / height_px;
    ((ratio / (16.0 / 9.0)) - 1.0).abs() <= tolerance
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeometryConfig {
    pub units: UnitFilter,
    pub collisions: CollisionConfig,
    pub x_tol: f64,
    pub y_tol: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            units: UnitFilter::default(),
            collisions: CollisionConfig::default(),
            x_tol: DEFAULT_X_TOL,
            y_tol: DEFAULT_Y_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub collision_score: f64,
    pub events: Vec<CollisionEvent>,
    /// `None` when nothing non-exempt is on the page.
    pub centroid: Option<(f64, f64)>,
    pub imbalance_d: f64,
    pub unit_count: usize,
    pub exempt_count: usize,
}

/// Runs unit extraction, collision scoring and imbalance on one snapshot.
/// An empty layout is scored with the corner-centroid (worst-case) imbalance.
pub fn analyze_geometry(snapshot: &LayoutSnapshot, config: &GeometryConfig) -> GeometryReport {
    let units = extract_visual_units(snapshot, &config.units);
    let events = detect_collisions(&units, snapshot.canvas, &config.collisions);
    let centroid = visual_centroid(&units, snapshot.canvas).ok();
    let imbalance_d = imbalance_distance(centroid.unwrap_or((0.0, 0.0)), config.x_tol, config.y_tol);
    GeometryReport {
        collision_score: collision_score(&events, &config.collisions.weights),
        events,
        centroid,
        imbalance_d,
        unit_count: units.len(),
        exempt_count: units.iter().filter(|u| u.exempt).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::RawNode;

    fn canvas() -> Canvas {
        Canvas::new(1280, 720)
    }

    fn unit(id: usize, bbox: BBox, kind: UnitKind) -> VisualUnit {
        VisualUnit {
            unit_id: id,
            source_node: id,
            bbox,
            area_px2: bbox.area(),
            kind,
            exempt: false,
            span_end: id + 1,
            container: None,
        }
    }

    #[test]
    fn single_div_is_one_container_unit() {
        let mut div = RawNode::element(0, None, "div", BBox::new(10.0, 10.0, 200.0, 100.0));
        div.background_is_transparent = false;
        let snap = LayoutSnapshot::new(canvas(), vec![div]).unwrap();
        let units = extract_visual_units(&snap, &UnitFilter::default());
        assert_eq!(units.len(), 1);
        // A leaf box with no text or image is classed as `other`, still a unit.
        assert!(!units[0].exempt);
    }

    #[test]
    fn svg_subtree_collapses_to_root() {
        let mut nodes = vec![RawNode::element(0, None, "svg", BBox::new(0.0, 0.0, 300.0, 300.0))];
        for i in 1..=40 {
            let mut p = RawNode::element(i, Some(0), "path", BBox::new(i as f64, 0.0, 30.0, 30.0));
            p.is_svg_primitive = true;
            nodes.push(p);
        }
        let snap = LayoutSnapshot::new(canvas(), nodes).unwrap();
        let units = extract_visual_units(&snap, &UnitFilter::default());
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].kind, UnitKind::Vector);
    }

    #[test]
    fn hidden_tiny_and_non_semantic_nodes_are_dropped() {
        let mut nodes = vec![RawNode::element(0, None, "section", BBox::new(0.0, 0.0, 1280.0, 720.0))];
        let visible = [
            BBox::new(100.0, 100.0, 200.0, 50.0),
            BBox::new(400.0, 100.0, 200.0, 50.0),
            BBox::new(700.0, 100.0, 200.0, 50.0),
            BBox::new(100.0, 300.0, 200.0, 50.0),
            BBox::new(400.0, 300.0, 200.0, 50.0),
        ];
        for b in visible {
            let mut n = RawNode::element(nodes.len(), Some(0), "p", b);
            n.has_visible_text = true;
            nodes.push(n);
        }
        let mut hidden = RawNode::element(nodes.len(), Some(0), "div", BBox::new(0.0, 0.0, 50.0, 50.0));
        hidden.visible = false;
        nodes.push(hidden);
        let mut faded = RawNode::element(nodes.len(), Some(0), "div", BBox::new(0.0, 0.0, 50.0, 50.0));
        faded.opacity = 0.01;
        nodes.push(faded);
        let mut wm = RawNode::element(nodes.len(), Some(0), "div", BBox::new(500.0, 500.0, 300.0, 80.0));
        wm.class_hint = "brand Watermark".into();
        nodes.push(wm);
        nodes.push(RawNode::element(nodes.len(), Some(0), "script", BBox::new(0.0, 0.0, 100.0, 100.0)));
        nodes.push(RawNode::element(nodes.len(), Some(0), "span", BBox::new(0.0, 0.0, 3.0, 3.0)));

        let snap = LayoutSnapshot::new(canvas(), nodes).unwrap();
        let units = extract_visual_units(&snap, &UnitFilter::default());
        assert_eq!(units.len(), 7);
        assert_eq!(units.iter().filter(|u| u.exempt).count(), 1);
        assert_eq!(units[0].kind, UnitKind::Container);
        assert!(units[1..6].iter().all(|u| u.kind == UnitKind::Text && u.container == Some(0)));
    }

    #[test]
    fn corner_badge_and_weak_background_are_exempt() {
        let rules = ExemptionRules::default();
        let badge = RawNode::element(0, None, "div", BBox::new(1240.0, 690.0, 30.0, 20.0));
        assert!(is_exempt(&badge, canvas(), &rules));
        let centered = RawNode::element(0, None, "div", BBox::new(600.0, 350.0, 30.0, 20.0));
        assert!(!is_exempt(&centered, canvas(), &rules));
        let mut weak = RawNode::element(0, None, "div", BBox::new(0.0, 0.0, 1280.0, 720.0));
        weak.opacity = 0.1;
        assert!(is_exempt(&weak, canvas(), &rules));
        let off = ExemptionRules { weak_transparent_enabled: false, ..rules };
        assert!(!is_exempt(&weak, canvas(), &off));
    }

    #[test]
    fn disjoint_siblings_have_no_events() {
        let units = vec![
            unit(0, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Text),
            unit(1, BBox::new(200.0, 0.0, 100.0, 100.0), UnitKind::Text),
        ];
        assert!(detect_collisions(&units, canvas(), &CollisionConfig::default()).is_empty());
    }

    #[test]
    fn child_escaping_parent_emits_one_event() {
        let mut parent = unit(0, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Container);
        parent.span_end = 2;
        let mut child = unit(1, BBox::new(50.0, 50.0, 100.0, 100.0), UnitKind::Text);
        child.container = Some(0);
        let events = detect_collisions(&[parent, child], canvas(), &CollisionConfig::default());
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!(e.kind, CollisionKind::ParentEscape);
        assert_eq!((e.unit_a, e.unit_b), (1, Some(0)));
        assert_eq!(e.overlap_area_px2, 7_500.0);
    }

    #[test]
    fn overlap_needs_to_clear_threshold() {
        // 7x7 = 49 px² < 64 px² floor.
        let units = vec![
            unit(0, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Text),
            unit(1, BBox::new(93.0, 93.0, 100.0, 100.0), UnitKind::Text),
        ];
        assert!(detect_collisions(&units, canvas(), &CollisionConfig::default()).is_empty());
        let units = vec![
            unit(0, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Text),
            unit(1, BBox::new(90.0, 90.0, 100.0, 100.0), UnitKind::Text),
        ];
        // 100 px² clears the floor but not 2% of the smaller box (200 px²).
        assert!(detect_collisions(&units, canvas(), &CollisionConfig::default()).is_empty());
        let units = vec![
            unit(0, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Text),
            unit(1, BBox::new(85.0, 85.0, 100.0, 100.0), UnitKind::Text),
        ];
        let ev = detect_collisions(&units, canvas(), &CollisionConfig::default());
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].overlap_area_px2, 225.0);
    }

    #[test]
    fn exempt_overlaps_only_count_over_main_content() {
        let mut wm = unit(0, BBox::new(0.0, 0.0, 400.0, 400.0), UnitKind::Other);
        wm.exempt = true;
        let text = unit(1, BBox::new(100.0, 100.0, 100.0, 50.0), UnitKind::Text);
        let boxy = unit(2, BBox::new(250.0, 250.0, 100.0, 50.0), UnitKind::Container);
        let ev = detect_collisions(&[wm.clone(), text, boxy], canvas(), &CollisionConfig::default());
        assert_eq!(ev.len(), 1);
        assert_eq!((ev[0].unit_a, ev[0].unit_b), (0, Some(1)));
        let mut wm2 = unit(1, BBox::new(50.0, 50.0, 100.0, 100.0), UnitKind::Text);
        wm2.exempt = true;
        assert!(detect_collisions(&[wm, wm2], canvas(), &CollisionConfig::default()).is_empty());
    }

    #[test]
    fn collision_score_examples() {
        let w = CollisionWeights::default();
        assert_eq!(collision_score(&[], &w), 0.0);
        let ev = |kind, a: f64, r: f64| CollisionEvent {
            kind,
            unit_a: 0,
            unit_b: None,
            overlap_area_px2: a,
            reference_area_px2: r,
            severity_weight: w.for_kind(kind),
        };
        assert_eq!(collision_score(&[ev(CollisionKind::Overlap, 400.0, 400.0)], &w), 1.0);
        let mixed = [
            ev(CollisionKind::Overlap, 50.0, 100.0),
            ev(CollisionKind::Overlap, 200.0, 400.0),
            ev(CollisionKind::CanvasOverflow, 25.0, 100.0),
        ];
        assert!((collision_score(&mixed, &w) - 1.375).abs() < 1e-12);
    }

    #[test]
    fn centroid_examples() {
        let c = canvas();
        let centered = unit(0, BBox::new(540.0, 310.0, 200.0, 100.0), UnitKind::Text);
        assert_eq!(visual_centroid(&[centered], c).unwrap(), (0.5, 0.5));

        let at = |id, fx: f64, fy: f64, area: f64| {
            let side = area.sqrt();
            let (cx, cy) = (fx * 1280.0, fy * 720.0);
            unit(id, BBox::new(cx - side / 2.0, cy - side / 2.0, side, side), UnitKind::Text)
        };
        let (x, _) = visual_centroid(&[at(0, 0.25, 0.5, 400.0), at(1, 0.75, 0.5, 400.0)], c).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        let three = [at(0, 0.2, 0.5, 100.0), at(1, 0.5, 0.5, 200.0), at(2, 0.8, 0.5, 300.0)];
        let (x, y) = visual_centroid(&three, c).unwrap();
        assert!((x - 0.6).abs() < 1e-12);
        assert!((y - 0.5).abs() < 1e-12);
    }

    #[test]
    fn enclosing_container_is_not_double_counted() {
        let c = canvas();
        let frame = unit(0, BBox::new(0.0, 0.0, 1280.0, 720.0), UnitKind::Container);
        let a = unit(1, BBox::new(0.0, 0.0, 100.0, 100.0), UnitKind::Text);
        let b = unit(2, BBox::new(0.0, 200.0, 100.0, 100.0), UnitKind::Text);
        let (x, _) = visual_centroid(&[frame, a, b], c).unwrap();
        assert!((x - 50.0 / 1280.0).abs() < 1e-12);
    }

    #[test]
    fn centroid_requires_content() {
        let mut only = unit(0, BBox::new(0.0, 0.0, 10.0, 10.0), UnitKind::Text);
        only.exempt = true;
        assert_eq!(visual_centroid(&[only], canvas()), Err(DomError::NoContent));
        assert_eq!(visual_centroid(&[], canvas()), Err(DomError::NoContent));
    }

    #[test]
    fn imbalance_examples() {
        assert_eq!(imbalance_distance((0.5, 0.5), 0.05, 0.15), 0.0);
        assert!((imbalance_distance((0.55, 0.5), 0.05, 0.15) - 1.0).abs() < 1e-12);
        assert!((imbalance_distance((0.55, 0.65), 0.05, 0.15) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn aspect_compliance_examples() {
        assert!(aspect_compliance(1280.0, 720.0, 0.01));
        assert!(!aspect_compliance(1280.0, 760.0, 0.05));
        assert!(aspect_compliance(1280.0, 760.0, 0.06));
        assert!(aspect_compliance(1280.0, 726.0, 0.01));
    }

    #[test]
    fn empty_layout_gets_worst_case_imbalance() {
        let snap = LayoutSnapshot::new(canvas(), vec![]).unwrap();
        let report = analyze_geometry(&snap, &GeometryConfig::default());
        assert_eq!(report.unit_count, 0);
        assert!(report.centroid.is_none());
        assert!((report.imbalance_d - imbalance_distance((0.0, 0.0), 0.05, 0.15)).abs() < 1e-12);
        assert_eq!(report.collision_score, 0.0);
    }
}
