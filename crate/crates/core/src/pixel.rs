//! Excessive-whitespace detection on rendered screenshots.
//!
//! The chain is: Rec. 601 grayscale, optional Gaussian pre-smoothing, local
//! variance over a large box neighborhood (two box filters on `I` and `I²`
//! via integral images), clip-normalization of the local standard deviation
//! into `F(x,y) ∈ [0,1]`, border crop, and thresholding at `tau`.
//!
//! Both filters use half-sample symmetric reflection at the borders
//! (`cba|abc|cba`), extended periodically so kernels larger than the image
//! are well defined. With a normalized symmetric kernel this reflection keeps
//! the global mean of the image unchanged.

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PixelError {
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("image is too small for the configured border crop")]
    TooSmall,
    #[error("kernel size {0} must be odd and >= 1")]
    InvalidKernel(usize),
    #[error("invalid whitespace config: {0}")]
    InvalidConfig(String),
    #[error("buffer length {len} does not match {width}x{height}")]
    ShapeMismatch { width: usize, height: usize, len: usize },
    #[error("could not decode image: {0}")]
    Decode(String),
}

/// Real-valued luminance image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, PixelError> {
        if width == 0 || height == 0 {
            return Err(PixelError::EmptyImage);
        }
        if pixels.len() != width * height {
            return Err(PixelError::ShapeMismatch { width, height, len: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, pixels: vec![value; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

/// Raw local variance `Var(x,y)` before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceField {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Normalized local variance map `F(x,y) = min(σ, T_clip) / T_clip`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl VarianceMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WhitespaceConfig {
    /// Gaussian kernel size; 1 disables pre-smoothing.
    pub gaussian_kernel: usize,
    pub box_h: usize,
    pub box_w: usize,
    pub t_clip: f64,
    pub tau: f64,
    pub border_crop_frac: f64,
}

impl Default for WhitespaceConfig {
    fn default() -> Self {
        Self {
            gaussian_kernel: 21,
            box_h: 201,
            box_w: 151,
            t_clip: 50.0,
            tau: 0.05,
            border_crop_frac: 0.05,
        }
    }
}

impl WhitespaceConfig {
    pub fn validate(&self) -> Result<(), PixelError> {
        for k in [self.gaussian_kernel, self.box_h, self.box_w] {
            check_kernel(k)?;
        }
        if !(self.t_clip > 0.0) {
            return Err(PixelError::InvalidConfig(format!("t_clip = {}", self.t_clip)));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(PixelError::InvalidConfig(format!("tau = {}", self.tau)));
        }
        if !(0.0..=0.25).contains(&self.border_crop_frac) {
            return Err(PixelError::InvalidConfig(format!(
                "border_crop_frac = {}",
                self.border_crop_frac
            )));
        }
        Ok(())
    }
}

fn check_kernel(k: usize) -> Result<(), PixelError> {
    if k == 0 || k.is_multiple_of(2) {
        Err(PixelError::InvalidKernel(k))
    } else {
        Ok(())
    }
}

/// Maps any integer coordinate onto `[0, n)` by half-sample symmetric reflection.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

pub fn to_grayscale(img: &RgbImage) -> Result<GrayImage, PixelError> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err(PixelError::EmptyImage);
    }
    let pixels = img
        .pixels()
        .map(|Rgb([r, g, b])| 0.299 * *r as f64 + 0.587 * *g as f64 + 0.114 * *b as f64)
        .collect();
    Ok(GrayImage { width: w as usize, height: h as usize, pixels })
}

/// Sigma derived from the kernel size the way OpenCV does when sigma is unset.
pub fn gaussian_sigma(kernel: usize) -> f64 {
    0.3 * ((kernel as f64 - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized 1-D Gaussian taps for an odd kernel size.
pub fn gaussian_kernel(kernel: usize) -> Result<Vec<f64>, PixelError> {
    check_kernel(kernel)?;
    if kernel == 1 {
        return Ok(vec![1.0]);
    }
    let sigma = gaussian_sigma(kernel);
    let r = (kernel / 2) as f64;
    let mut taps: Vec<f64> = (0..kernel)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable Gaussian blur with reflected borders; dimensions are unchanged.
pub fn gaussian_smooth(gray: &GrayImage, kernel: usize) -> Result<GrayImage, PixelError> {
    let taps = gaussian_kernel(kernel)?;
    if taps.len() == 1 {
        return Ok(gray.clone());
    }
    let (w, h) = (gray.width, gray.height);
    let r = (taps.len() / 2) as isize;

    let col_idx: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| (-r..=r).map(|d| reflect_index(x + d, w)).collect())
        .collect();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &gray.pixels[y * w..(y + 1) * w];
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            *o = taps.iter().zip(&col_idx[x]).map(|(t, &i)| t * row[i]).sum();
        }
    }

    let mut out = vec![0.0; w * h];
    let mut acc = vec![0.0; w];
    for y in 0..h as isize {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (t, d) in taps.iter().zip(-r..=r) {
            let src = reflect_index(y + d, h);
            let row = &tmp[src * w..(src + 1) * w];
            for (a, v) in acc.iter_mut().zip(row) {
                *a += t * v;
            }
        }
        out[y as usize * w..(y as usize + 1) * w].copy_from_slice(&acc);
    }
    Ok(GrayImage { width: w, height: h, pixels: out })
}

/// Summed-area table over a reflect-padded copy of the image.
struct PaddedIntegral {
    stride: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl PaddedIntegral {
    fn build(gray: &GrayImage, pad_x: usize, pad_y: usize, offset: f64) -> Self {
        let (w, h) = (gray.width, gray.height);
        let pw = w + 2 * pad_x;
        let ph = h + 2 * pad_y;
        let stride = pw + 1;
        let mut sum = vec![0.0; stride * (ph + 1)];
        let mut sum_sq = vec![0.0; stride * (ph + 1)];
        let xs: Vec<usize> =
            (0..pw).map(|px| reflect_index(px as isize - pad_x as isize, w)).collect();
        for py in 0..ph {
            let sy = reflect_index(py as isize - pad_y as isize, h);
            let src = &gray.pixels[sy * w..(sy + 1) * w];
            let (mut row_s, mut row_q) = (0.0, 0.0);
            for (px, &sx) in xs.iter().enumerate() {
                let v = src[sx] - offset;
                row_s += v;
                row_q += v * v;
                let i = (py + 1) * stride + px + 1;
                sum[i] = sum[i - stride] + row_s;
                sum_sq[i] = sum_sq[i - stride] + row_q;
            }
        }
        Self { stride, sum, sum_sq }
    }

    /// Sums over the padded rectangle `[x0, x1) × [y0, y1)`.
    #[inline]
    fn rect(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> (f64, f64) {
        let s = self.stride;
        let at = |t: &[f64]| t[y1 * s + x1] - t[y0 * s + x1] - t[y1 * s + x0] + t[y0 * s + x0];
        (at(&self.sum), at(&self.sum_sq))
    }
}

/// Local variance `E[I²] − E[I]²` over a `box_h × box_w` neighborhood centered at each pixel.
pub fn local_variance_map(
    gray: &GrayImage,
    box_h: usize,
    box_w: usize,
) -> Result<VarianceField, PixelError> {
    check_kernel(box_h)?;
    check_kernel(box_w)?;
    let (w, h) = (gray.width, gray.height);
    let (rx, ry) = (box_w / 2, box_h / 2);
    // Centering first keeps E[I²] − E[I]² away from catastrophic cancellation.
    let offset = gray.mean();
    let table = PaddedIntegral::build(gray, rx, ry, offset);
    let n = (box_h * box_w) as f64;
    let mut values = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (s, q) = table.rect(x, y, x + box_w, y + box_h);
            let mean = s / n;
            values[y * w + x] = (q / n - mean * mean).max(0.0);
        }
    }
    Ok(VarianceField { width: w, height: h, values })
}

pub fn normalize_clip(var: &VarianceField, t_clip: f64) -> Result<VarianceMap, PixelError> {
    if !(t_clip > 0.0) {
        return Err(PixelError::InvalidConfig(format!("t_clip = {t_clip}")));
    }
    let values = var.values.iter().map(|&v| v.max(0.0).sqrt().min(t_clip) / t_clip).collect();
    Ok(VarianceMap { width: var.width, height: var.height, values })
}

/// Half-open pixel rectangle left after removing the border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CropRect {
    pub fn for_image(width: usize, height: usize, frac: f64) -> Result<Self, PixelError> {
        let cx = (width as f64 * frac).floor() as usize;
        let cy = (height as f64 * frac).floor() as usize;
        if 2 * cx >= width || 2 * cy >= height {
            return Err(PixelError::TooSmall);
        }
        Ok(Self { x0: cx, y0: cy, x1: width - cx, y1: height - cy })
    }

    #[inline]
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn area(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

#[derive(Debug, Clone)]
pub struct WhitespaceAnalysis {
    pub ratio: f64,
    pub whitespace_pixels: usize,
    pub total_pixels: usize,
    pub crop: CropRect,
    pub map: VarianceMap,
}

impl WhitespaceAnalysis {
    /// Full-size mask, true where the pixel counts as whitespace (inside the crop only).
    pub fn mask(&self, tau: f64) -> Vec<bool> {
        whitespace_mask(&self.map, tau, &self.crop)
    }
}

pub fn whitespace_mask(map: &VarianceMap, tau: f64, crop: &CropRect) -> Vec<bool> {
    let mut mask = vec![false; map.width * map.height];
    for y in crop.y0..crop.y1 {
        for x in crop.x0..crop.x1 {
            mask[y * map.width + x] = map.get(x, y) < tau;
        }
    }
    mask
}

/// Variance map of a grayscale image under `config` (smoothing, box variance, clip).
pub fn variance_map(gray: &GrayImage, config: &WhitespaceConfig) -> Result<VarianceMap, PixelError> {
    config.validate()?;
    let smoothed = gaussian_smooth(gray, config.gaussian_kernel)?;
    let var = local_variance_map(&smoothed, config.box_h, config.box_w)?;
    normalize_clip(&var, config.t_clip)
}

pub fn analyze_whitespace(
    img: &RgbImage,
    config: &WhitespaceConfig,
) -> Result<WhitespaceAnalysis, PixelError> {
    config.validate()?;
    let gray = to_grayscale(img)?;
    let crop = CropRect::for_image(gray.width, gray.height, config.border_crop_frac)?;
    let map = variance_map(&gray, config)?;
    let mut blank = 0usize;
    for y in crop.y0..crop.y1 {
        let row = &map.values[y * map.width..(y + 1) * map.width];
        blank += row[crop.x0..crop.x1].iter().filter(|&&f| f < config.tau).count();
    }
    let total = crop.area();
    Ok(WhitespaceAnalysis {
        ratio: blank as f64 / total as f64,
        whitespace_pixels: blank,
        total_pixels: total,
        crop,
        map,
    })
}

/// Fraction of (cropped) pixels whose normalized local variance is below `tau`.
pub fn whitespace_ratio(img: &RgbImage, config: &WhitespaceConfig) -> Result<f64, PixelError> {
    analyze_whitespace(img, config).map(|a| a.ratio)
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage, PixelError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| PixelError::Decode(e.to_string()))?;
    Ok(img.to_rgb8())
}

pub fn whitespace_ratio_png(bytes: &[u8], config: &WhitespaceConfig) -> Result<f64, PixelError> {
    whitespace_ratio(&decode_png(bytes)?, config)
}
