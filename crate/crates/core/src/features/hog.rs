//! Histogram of oriented gradients over a fixed-size patch.
//!
//! Gradients use the centered `[-1, 0, 1]` kernel with replicated borders.
//! Orientations are unsigned (`[0°, 180°)`) and vote into `orientation_bins`
//! bins whose centers sit at `b · 180° / bins`, splitting each vote linearly
//! between the two nearest centers (wrapping at 180°). Cells that would run
//! past the patch edge are dropped. Blocks of `block_size × block_size` cells
//! are L2-hys normalized and concatenated row-major.

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::error::{Error, Result};
use crate::features::GrayImage;

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HogConfig {
    pub resize_w: usize,
    pub resize_h: usize,
    pub cell_size: usize,
    pub orientation_bins: usize,
    /// Block side length in cells.
    pub block_size: usize,
    /// Block stride in cells.
    pub block_stride: usize,
    pub clip_value: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            resize_w: 50,
            resize_h: 60,
            cell_size: 8,
            orientation_bins: 9,
            block_size: 2,
            block_stride: 1,
            clip_value: 0.2,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(format!("hog: {m}")));
        if self.resize_w == 0 || self.resize_h == 0 {
            return bad("resize dimensions must be positive");
        }
        if self.cell_size == 0 || self.orientation_bins == 0 {
            return bad("cell size and bin count must be positive");
        }
        if self.block_size == 0 || self.block_stride == 0 {
            return bad("block size and stride must be positive");
        }
        if !(self.clip_value > 0.0 && self.clip_value.is_finite()) {
            return bad("clip value must be positive");
        }
        let (cx, cy) = self.cells();
        if cx < self.block_size || cy < self.block_size {
            return bad("cell grid smaller than one block");
        }
        Ok(())
    }

    /// Cell grid `(columns, rows)`.
    pub fn cells(&self) -> (usize, usize) {
        (self.resize_w / self.cell_size, self.resize_h / self.cell_size)
    }

    /// Block grid `(columns, rows)`.
    pub fn blocks(&self) -> (usize, usize) {
        let (cx, cy) = self.cells();
        let along = |c: usize| {
            if c < self.block_size {
                0
            } else {
                (c - self.block_size) / self.block_stride + 1
            }
        };
        (along(cx), along(cy))
    }

    pub fn descriptor_len(&self) -> usize {
        let (bx, by) = self.blocks();
        bx * by * self.block_size * self.block_size * self.orientation_bins
    }
}

/// Computes the HOG descriptor of a patch whose size matches the config.
pub fn hog(patch: &GrayImage, config: &HogConfig) -> Result<FeatureVector> {
    config.validate()?;
    if patch.width() != config.resize_w || patch.height() != config.resize_h {
        return Err(Error::InvalidInput(format!(
            "patch is {}x{}, expected {}x{}",
            patch.width(),
            patch.height(),
            config.resize_w,
            config.resize_h
        )));
    }
    let cells = cell_histograms(patch, config);
    Ok(FeatureVector::new(normalize_blocks(&cells, config))
        .expect("normalized histograms are finite"))
}

/// Per-cell orientation histograms, `cells[(cy * cells_x + cx) * bins + b]`.
fn cell_histograms(patch: &GrayImage, config: &HogConfig) -> Vec<f64> {
    let (cells_x, cells_y) = config.cells();
    let bins = config.orientation_bins;
    let (w, h) = (patch.width(), patch.height());
    let bin_width = std::f64::consts::PI / bins as f64;
    let mut hist = vec![0.0; cells_x * cells_y * bins];

    for y in 0..cells_y * config.cell_size {
        let cy = y / config.cell_size;
        let (up, down) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..cells_x * config.cell_size {
            let cx = x / config.cell_size;
            let (left, right) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let gx = patch.get(right, y) - patch.get(left, y);
            let gy = patch.get(x, down) - patch.get(x, up);
            let magnitude = gx.hypot(gy);
            if magnitude == 0.0 {
                continue;
            }
            let mut angle = gy.atan2(gx);
            if angle < 0.0 {
                angle += std::f64::consts::PI;
            }
            let pos = angle / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let lo = (lower as usize) % bins;
            let hi = (lo + 1) % bins;
            let base = (cy * cells_x + cx) * bins;
            hist[base + lo] += magnitude * (1.0 - frac);
            hist[base + hi] += magnitude * frac;
        }
    }
    hist
}

fn normalize_blocks(cells: &[f64], config: &HogConfig) -> Vec<f64> {
    let (cells_x, _) = config.cells();
    let (blocks_x, blocks_y) = config.blocks();
    let bins = config.orientation_bins;
    let side = config.block_size;
    let mut out = Vec::with_capacity(config.descriptor_len());
    let mut block = Vec::with_capacity(side * side * bins);

    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            block.clear();
            for dy in 0..side {
                for dx in 0..side {
                    let cell = (by * config.block_stride + dy) * cells_x + bx * config.block_stride + dx;
                    block.extend_from_slice(&cells[cell * bins..(cell + 1) * bins]);
                }
            }
            l2_normalize(&mut block);
            for v in block.iter_mut() {
                *v = v.min(config.clip_value);
            }
            l2_normalize(&mut block);
            out.extend_from_slice(&block);
        }
    }
    out
}

fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt() + EPS;
    for x in v.iter_mut() {
        *x /= norm;
    }
}
