//! Red whitespace overlays on top of a screenshot.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::pixel::{whitespace_mask, CropRect, PixelError, VarianceMap};

pub const OVERLAY_ALPHA: f64 = 0.45;
const RED: [f64; 3] = [255.0, 0.0, 0.0];

/// Blends red at [`OVERLAY_ALPHA`] over every cropped pixel with `F < tau`.
pub fn overlay_image(
    screenshot: &RgbImage,
    map: &VarianceMap,
    tau: f64,
    crop: &CropRect,
) -> Result<RgbImage, PixelError> {
    let (w, h) = (screenshot.width() as usize, screenshot.height() as usize);
    if w != map.width || h != map.height {
        return Err(PixelError::ShapeMismatch { width: map.width, height: map.height, len: w * h });
    }
    let mask = whitespace_mask(map, tau, crop);
    let mut out = screenshot.clone();
    for (i, px) in out.pixels_mut().enumerate() {
        if mask[i] {
            let blended: [u8; 3] = std::array::from_fn(|c| {
                let v = (1.0 - OVERLAY_ALPHA) * px.0[c] as f64 + OVERLAY_ALPHA * RED[c];
                v.round().clamp(0.0, 255.0) as u8
            });
            *px = Rgb(blended);
        }
    }
    Ok(out)
}

pub fn emit_overlay(
    screenshot: &RgbImage,
    map: &VarianceMap,
    tau: f64,
    crop: &CropRect,
    out_path: &Path,
) -> Result<(), PixelError> {
    let img = overlay_image(screenshot, map, tau, crop)?;
    img.save_with_format(out_path, image::ImageFormat::Png)
        .map_err(|e| PixelError::Decode(e.to_string()))
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, PixelError> {
    let mut buf = std::io::Cursor::new(Vec::new());
    img.write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| PixelError::Decode(e.to_string()))?;
    Ok(buf.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::{analyze_whitespace, WhitespaceConfig};

    fn small_cfg() -> WhitespaceConfig {
        WhitespaceConfig { gaussian_kernel: 1, box_h: 5, box_w: 5, ..Default::default() }
    }

    #[test]
    fn blank_slide_is_red_inside_crop_only() {
        let img = RgbImage::from_pixel(40, 30, Rgb([255, 255, 255]));
        let cfg = small_cfg();
        let a = analyze_whitespace(&img, &cfg).unwrap();
        let out = overlay_image(&img, &a.map, cfg.tau, &a.crop).unwrap();
        for (x, y, px) in out.enumerate_pixels() {
            let expect = if a.crop.contains(x as usize, y as usize) { Rgb([255, 140, 140]) } else { Rgb([255, 255, 255]) };
            assert_eq!(*px, expect);
        }
    }

    #[test]
    fn mismatched_map_is_rejected() {
        let img = RgbImage::new(10, 10);
        let map = VarianceMap { width: 9, height: 10, values: vec![0.0; 90] };
        let crop = CropRect { x0: 0, y0: 0, x1: 9, y1: 10 };
        assert!(matches!(overlay_image(&img, &map, 0.05, &crop), Err(PixelError::ShapeMismatch { .. })));
    }

    #[test]
    fn png_round_trip() {
        let img = RgbImage::from_pixel(3, 2, Rgb([1, 2, 3]));
        let bytes = encode_png(&img).unwrap();
        assert_eq!(crate::pixel::decode_png(&bytes).unwrap(), img);
    }
}
