//! Turns a rendered page into a metric report (and optionally an overlay).

use slidescore_core::api::Pipeline;
use slidescore_core::dom::{analyze_geometry, GeometryConfig};
use slidescore_core::overlay::{encode_png, overlay_image};
use slidescore_core::pixel::{analyze_whitespace, WhitespaceConfig};
use slidescore_core::reward::{MetricReport, RenderErrorCode};
use slidescore_gateway::RenderedPage;

#[derive(Debug, Clone, Default)]
pub struct MetricConfig {
    pub whitespace: WhitespaceConfig,
    pub geometry: GeometryConfig,
}

#[derive(Debug, Clone, Default)]
pub struct Scored {
    pub report: MetricReport,
    pub overlay_png: Option<Vec<u8>>,
    pub warnings: Vec<String>,
}

/// Runs the metrics `pipeline` asks for on `page`. A page that failed to render
/// yields a report carrying only the render error.
pub fn score_page(page: &RenderedPage, pipeline: Pipeline, cfg: &MetricConfig, want_overlay: bool) -> Scored {
    let mut out = Scored::default();
    if let Some(code) = page.render_error {
        out.report = MetricReport::failed(code);
        return out;
    }

    if pipeline.measures_aspect() {
        match page.measured {
            Some(m) => out.report.aspect_ratio = Some(m.ratio),
            None => out.warnings.push("aspect ratio was not measured".into()),
        }
    }

    if pipeline.measures_whitespace() || want_overlay {
        match &page.screenshot {
            None => {
                out.report = MetricReport::failed(RenderErrorCode::EmptyPage);
                return out;
            }
            Some(shot) => match analyze_whitespace(shot, &cfg.whitespace) {
                Ok(a) => {
                    if pipeline.measures_whitespace() {
                        out.report.whitespace_ratio = Some(a.ratio);
                    }
                    if want_overlay {
                        match overlay_image(shot, &a.map, cfg.whitespace.tau, &a.crop).and_then(|img| encode_png(&img)) {
                            Ok(png) => out.overlay_png = Some(png),
                            Err(e) => out.warnings.push(format!("overlay: {e}")),
                        }
                    }
                }
                Err(e) => out.warnings.push(format!("whitespace: {e}")),
            },
        }
    }

    if pipeline.measures_geometry() {
        match &page.snapshot {
            Some(snap) => {
                let g = analyze_geometry(snap, &cfg.geometry);
                if g.centroid.is_none() {
                    out.warnings.push("no visual units; imbalance scored at the worst case".into());
                }
                out.report.collision_score = Some(g.collision_score);
                out.report.imbalance_d = Some(g.imbalance_d);
            }
            None => {
                out.report = MetricReport::failed(RenderErrorCode::ProbeFailed);
                return out;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgb, RgbImage};
    use slidescore_gateway::AspectMeasurement;

    fn blank_page() -> RenderedPage {
        RenderedPage {
            screenshot: Some(RgbImage::from_pixel(320, 180, Rgb([255, 255, 255]))),
            width_px: 320,
            height_px: 180,
            measured: Some(AspectMeasurement { width_px: 320, height_px: 180, ratio: 320.0 / 180.0, content_height_px: 180, clamped: false }),
            ..Default::default()
        }
    }

    #[test]
    fn render_error_short_circuits() {
        let page = RenderedPage::failed(RenderErrorCode::Timeout, "slow");
        let s = score_page(&page, Pipeline::Full, &MetricConfig::default(), true);
        assert_eq!(s.report, MetricReport::failed(RenderErrorCode::Timeout));
        assert!(s.overlay_png.is_none());
    }

    #[test]
    fn pipelines_fill_only_their_metrics() {
        let cfg = MetricConfig::default();
        let s = score_page(&blank_page(), Pipeline::Aspect, &cfg, false);
        assert!(s.report.aspect_ratio.is_some() && s.report.whitespace_ratio.is_none());
        let s = score_page(&blank_page(), Pipeline::Whitespace, &cfg, false);
        assert_eq!(s.report.whitespace_ratio, Some(1.0));
        assert!(s.report.aspect_ratio.is_none() && s.report.collision_score.is_none());
    }

    #[test]
    fn missing_snapshot_is_a_probe_failure() {
        let s = score_page(&blank_page(), Pipeline::Geometry, &MetricConfig::default(), false);
        assert_eq!(s.report.render_error, Some(RenderErrorCode::ProbeFailed));
    }

    #[test]
    fn overlay_is_a_png_of_the_page() {
        let s = score_page(&blank_page(), Pipeline::Aspect, &MetricConfig::default(), true);
        let png = s.overlay_png.unwrap();
        let img = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(img.dimensions(), (320, 180));
        assert_eq!(img.get_pixel(160, 90).0, [255, 140, 140]);
        assert!(s.report.whitespace_ratio.is_none());
    }
}
