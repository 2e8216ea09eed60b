use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::features::HogConfig;
use crate::geometry::BBox;

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    /// Builds an image, clipping intensities into `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("image has zero width or height".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} intensities for a {width}x{height} image, got {}",
                width * height,
                pixels.len()
            )));
        }
        if pixels.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("NaN intensity".into()));
        }
        let pixels = pixels.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Parses a binary (P5) PGM with maxval at most 255.
    pub fn read_pgm<R: Read>(mut reader: R) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        let mut pos = 0usize;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::InvalidInput("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        if token()? != "P5" {
            return Err(Error::InvalidInput("not a binary PGM (P5) file".into()));
        }
        let mut number = |what: &str| -> Result<usize> {
            token()?
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad PGM {what}")))
        };
        let width = number("width")?;
        let height = number("height")?;
        let maxval = number("maxval")?;
        if maxval == 0 || maxval > 255 {
            return Err(Error::InvalidInput(format!("unsupported PGM maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        pos += 1;
        let raster = bytes
            .get(pos..pos + width * height)
            .ok_or_else(|| Error::InvalidInput("truncated PGM raster".into()))?;
        let scale = maxval as f64;
        Self::new(width, height, raster.iter().map(|&v| v as f64 / scale).collect())
    }

    /// Writes an 8-bit P5 PGM, rounding intensities to the nearest level.
    pub fn write_pgm<W: Write>(&self, mut writer: W) -> Result<()> {
        write!(writer, "P5\n{} {}\n255\n", self.width, self.height)?;
        let raster: Vec<u8> = self
            .pixels
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect();
        writer.write_all(&raster)?;
        Ok(())
    }
}

/// Samples the box region into a `resize_w × resize_h` patch with bilinear
/// interpolation.
///
/// Output pixel `(u, v)` samples the source at the continuous position of its
/// center, `x_min + (u + 0.5) · box_w / resize_w` (likewise for y). Samples are
/// clamped to the pixels the box covers, so nothing outside the box leaks in.
pub fn crop_and_resize(image: &GrayImage, bbox: &BBox, config: &HogConfig) -> Result<GrayImage> {
    if !bbox.within(image.width as f64, image.height as f64) {
        return Err(Error::InvalidInput(format!(
            "box {:?} outside {}x{} image",
            bbox.to_array(),
            image.width,
            image.height
        )));
    }
    let (out_w, out_h) = (config.resize_w, config.resize_h);
    let xs = sample_axis(bbox.x_min(), bbox.x_max(), out_w, image.width);
    let ys = sample_axis(bbox.y_min(), bbox.y_max(), out_h, image.height);

    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = image.get(x0, y0) * (1.0 - fx) + image.get(x1, y0) * fx;
            let bottom = image.get(x0, y1) * (1.0 - fx) + image.get(x1, y1) * fx;
            pixels.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    GrayImage::new(out_w, out_h, pixels)
}

/// For each output index: the two neighbouring source pixels and the weight
/// of the second one.
fn sample_axis(lo: f64, hi: f64, out: usize, limit: usize) -> Vec<(usize, usize, f64)> {
    let first = (lo.floor() as usize).min(limit - 1) as f64;
    let last = ((hi.ceil() as usize).max(1) - 1).min(limit - 1) as f64;
    let step = (hi - lo) / out as f64;
    (0..out)
        .map(|u| {
            // pixel i has its center at continuous coordinate i + 0.5
            let s = (lo + (u as f64 + 0.5) * step - 0.5).clamp(first, last);
            let i0 = s.floor();
            let frac = s - i0;
            let i0 = i0 as usize;
            let i1 = (i0 + 1).min(last as usize);
            (i0, i1, frac)
        })
        .collect()
}
