//! Axis-aligned boxes and intersection over union.
//!
//! Boxes are continuous rectangles `[x_min, x_max) × [y_min, y_max)` in pixel
//! units. For integer coordinates the continuous area equals the number of
//! covered pixels, so continuous IoU and pixel-set IoU coincide.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An axis-aligned rectangle with strictly positive area.
///
/// Serialized as `[x_min, y_min, x_max, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        let invalid = |why| Err(Error::InvalidBox(x_min, y_min, x_max, y_max, why));
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return invalid("non-finite coordinate");
        }
        if x_max <= x_min || y_max <= y_min {
            return invalid("non-positive area");
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    #[inline]
    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    #[inline]
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    #[inline]
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    #[inline]
    pub fn y_max(&self) -> f64 {
        self.y_max
    }
    #[inline]
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }
    #[inline]
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }
    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.x_min + self.x_max),
            0.5 * (self.y_min + self.y_max),
        )
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// True when the box lies inside `[0, width] × [0, height]`.
    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= width && self.y_max <= height
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Result<Self> {
        BBox::new(
            self.x_min + dx,
            self.y_min + dy,
            self.x_max + dx,
            self.y_max + dy,
        )
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        BBox::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.to_array()
    }
}

/// Intersection over union of two boxes, in `[0, 1]`.
///
/// Exactly symmetric, exactly 1 for identical boxes, and 0 for boxes that
/// share no interior.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}
