use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle, top-left anchored, y growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub const fn new(x0: u32, y0: u32, width: u32, height: u32) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
        }
    }

    pub fn x1(&self) -> u32 {
        self.x0 + self.width
    }

    pub fn y1(&self) -> u32 {
        self.y0 + self.height
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            f64::from(self.x0) + f64::from(self.width) / 2.0,
            f64::from(self.y0) + f64::from(self.height) / 2.0,
        )
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let w = self.x1().min(other.x1()).saturating_sub(self.x0.max(other.x0));
        let h = self.y1().min(other.y1()).saturating_sub(self.y0.max(other.y0));
        u64::from(w) * u64::from(h)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.intersection_area(other) > 0
    }

    pub fn iou(&self, other: &Rect) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Half-open containment test for a real-valued point.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= f64::from(self.x0)
            && x < f64::from(self.x1())
            && y >= f64::from(self.y0)
            && y < f64::from(self.y1())
    }

    pub fn fits_within(&self, width: u32, height: u32) -> bool {
        self.x1() <= width && self.y1() <= height
    }
}
