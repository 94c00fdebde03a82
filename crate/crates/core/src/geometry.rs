//! Axis-aligned boxes in CSS pixel space.

use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in document coordinates (CSS px).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    #[inline]
    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    #[inline]
    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    /// Intersection rectangle, if it has positive area.
    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = self.right().min(other.right());
        let y1 = self.bottom().min(other.bottom());
        (x1 > x0 && y1 > y0).then(|| BBox::new(x0, y0, x1 - x0, y1 - y0))
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        self.intersection(other).map_or(0.0, |b| b.area())
    }

    /// True when `other` lies entirely inside `self` (edges may touch).
    pub fn contains(&self, other: &BBox) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    /// Largest distance by which `self` sticks out of `outer` on any one side.
    pub fn protrusion_beyond(&self, outer: &BBox) -> f64 {
        let left = outer.x - self.x;
        let top = outer.y - self.y;
        let right = self.right() - outer.right();
        let bottom = self.bottom() - outer.bottom();
        left.max(top).max(right).max(bottom).max(0.0)
    }

    /// Area of `self` not covered by `outer`.
    pub fn area_outside(&self, outer: &BBox) -> f64 {
        (self.area() - self.intersection_area(outer)).max(0.0)
    }

    pub fn scaled(&self, factor: f64) -> BBox {
        BBox::new(self.x * factor, self.y * factor, self.w * factor, self.h * factor)
    }
}

/// Rendered page size in device pixels (device scale factor 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width_px: u32,
    pub height_px: u32,
}

impl Canvas {
    pub const fn new(width_px: u32, height_px: u32) -> Self {
        Self { width_px, height_px }
    }

    pub fn bounds(&self) -> BBox {
        BBox::new(0.0, 0.0, self.width_px as f64, self.height_px as f64)
    }

    pub fn area(&self) -> f64 {
        self.width_px as f64 * self.height_px as f64
    }

    pub fn is_empty(&self) -> bool {
        self.width_px == 0 || self.height_px == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intersection_of_disjoint_boxes_is_none() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let b = BBox::new(10.0, 0.0, 10.0, 10.0);
        assert!(a.intersection(&b).is_none());
        assert_eq!(a.intersection_area(&b), 0.0);
    }

    #[test]
    fn protrusion_picks_the_worst_side() {
        let parent = BBox::new(0.0, 0.0, 100.0, 100.0);
        let child = BBox::new(50.0, 50.0, 100.0, 100.0);
        assert_eq!(child.protrusion_beyond(&parent), 50.0);
        assert_eq!(child.area_outside(&parent), 10_000.0 - 2_500.0);
        assert_eq!(parent.protrusion_beyond(&parent), 0.0);
    }
}
