//! Seeded synthetic datasets with planted structure.
//!
//! Two modes:
//!
//! * `feature_only`: a planted unit vector `w*` and, per candidate, a latent
//!   quality `y ~ U[0, 1)` that becomes the IoU label. Features are
//!   `(y - 1/2) · w* + noise`, so `w*` ranks candidates exactly by label when
//!   the noise is zero. No groundtruth is emitted; these datasets exercise the
//!   solver, not the metrics.
//! * `geometric`: groundtruth boxes, jittered copies of them plus uniform
//!   random boxes as candidates, IoU labels from the boxes, and features that
//!   embed the label and box geometry plus noise. Candidate order is shuffled
//!   to mimic an unranked upstream generator.
//!
//! The geometric features contain the IoU label by construction. They are a
//! test bed for the training and evaluation pipeline and say nothing about how
//! HOG descriptors behave.

mod rng;

use serde::{Deserialize, Serialize};

use crate::dataset::{label_candidates, Candidate, Dataset, FeatureVector, GroundTruthObject, ImageRecord};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ranking::WeightVector;

pub use rng::{StreamRng, GENERATOR_DESCRIPTION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthMode {
    FeatureOnly,
    Geometric,
}

/// Number of leading structured components in geometric features:
/// constant, IoU, width, height, center x, center y.
pub const GEOMETRIC_STRUCTURED_DIMS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub mode: SynthMode,
    pub num_images: usize,
    pub candidates_per_image: usize,
    pub feature_dim: usize,
    /// Used verbatim when given; otherwise a unit vector is drawn.
    pub planted_weight: Option<Vec<f64>>,
    pub noise_sigma: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Inclusive range of groundtruth objects per image.
    pub objects_per_image: (usize, usize),
    pub classes: usize,
    pub copies_per_object: usize,
    /// Relative shift and scale applied to groundtruth copies.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            mode: SynthMode::FeatureOnly,
            num_images: 100,
            candidates_per_image: 100,
            feature_dim: 16,
            planted_weight: None,
            noise_sigma: 0.05,
            image_width: 500,
            image_height: 400,
            objects_per_image: (1, 3),
            classes: 3,
            copies_per_object: 8,
            jitter: 0.2,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("synth: {m}")));
        if self.num_images == 0 || self.candidates_per_image == 0 {
            return bad("need at least one image and one candidate".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be finite and non-negative, got {}", self.noise_sigma));
        }
        match self.mode {
            SynthMode::FeatureOnly => {
                if self.feature_dim == 0 {
                    return bad("feature_dim must be positive".into());
                }
                if let Some(w) = &self.planted_weight {
                    if w.len() != self.feature_dim {
                        return bad(format!("planted weight has {} components, feature_dim is {}", w.len(), self.feature_dim));
                    }
                    if w.iter().any(|v| !v.is_finite()) || w.iter().all(|v| *v == 0.0) {
                        return bad("planted weight must be finite and nonzero".into());
                    }
                }
            }
            SynthMode::Geometric => {
                if self.feature_dim < GEOMETRIC_STRUCTURED_DIMS {
                    return bad(format!("geometric mode needs feature_dim >= {GEOMETRIC_STRUCTURED_DIMS}"));
                }
                if self.image_width < 16 || self.image_height < 16 {
                    return bad("image must be at least 16x16".into());
                }
                let (lo, hi) = self.objects_per_image;
                if lo == 0 || hi < lo {
                    return bad(format!("objects_per_image range ({lo}, {hi}) is invalid"));
                }
                if self.classes == 0 {
                    return bad("classes must be positive".into());
                }
                if !(0.0..1.0).contains(&self.jitter) {
                    return bad(format!("jitter must lie in [0, 1), got {}", self.jitter));
                }
            }
        }
        Ok(())
    }
}

/// Sidecar metadata written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeta {
    pub config: SynthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_weight: Option<Vec<f64>>,
    pub generator: String,
    pub feature_layout: String,
}

impl SynthMeta {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn image_id(index: usize) -> String {
    format!("synth-{index:05}")
}

fn planted_weight(config: &SynthConfig) -> Vec<f64> {
    if let Some(w) = &config.planted_weight {
        return w.clone();
    }
    let mut rng = StreamRng::new(config.seed, 0);
    loop {
        let w: Vec<f64> = (0..config.feature_dim).map(|_| rng.normal()).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return w.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Feature-only dataset and the planted weight that generated it.
pub fn generate_feature_dataset(config: &SynthConfig) -> Result<(Dataset, WeightVector)> {
    config.validate()?;
    if config.mode != SynthMode::FeatureOnly {
        return Err(Error::InvalidConfig("synth: feature dataset requested in geometric mode".into()));
    }
    let w = planted_weight(config);
    let full = BBox::new(0.0, 0.0, config.image_width as f64, config.image_height as f64)?;
    let records = (0..config.num_images)
        .map(|j| {
            let mut rng = StreamRng::new(config.seed, j as u64 + 1);
            let candidates = (0..config.candidates_per_image)
                .map(|_| {
                    let y = rng.uniform();
                    let x: Vec<f64> = w
                        .iter()
                        .map(|wi| (y - 0.5) * wi + config.noise_sigma * rng.normal())
                        .collect();
                    Ok(Candidate {
                        iou_label: Some(y),
                        features: Some(FeatureVector::new(x)?),
                        ..Candidate::new(full)
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ImageRecord {
                image_id: image_id(j),
                width: config.image_width,
                height: config.image_height,
                groundtruth: vec![],
                candidates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(records)?, WeightVector::new(w)?))
}

/// A box with uniformly drawn size (at least 5% of each image side) and
/// uniformly drawn position.
pub fn uniform_box(rng: &mut StreamRng, width: f64, height: f64) -> BBox {
    let w = rng.range(0.05 * width, width);
    let h = rng.range(0.05 * height, height);
    let x0 = rng.range(0.0, width - w);
    let y0 = rng.range(0.0, height - h);
    BBox::new(x0, y0, (x0 + w).min(width), (y0 + h).min(height)).expect("positive size inside image")
}

fn jittered(rng: &mut StreamRng, gt: &BBox, jitter: f64, width: f64, height: f64) -> BBox {
    let (w, h) = (gt.width(), gt.height());
    let dx = jitter * w * rng.range(-1.0, 1.0);
    let dy = jitter * h * rng.range(-1.0, 1.0);
    let dw = jitter * w * rng.range(-1.0, 1.0);
    let dh = jitter * h * rng.range(-1.0, 1.0);
    let x0 = (gt.x_min() + dx - 0.5 * dw).max(0.0);
    let y0 = (gt.y_min() + dy - 0.5 * dh).max(0.0);
    let x1 = (gt.x_max() + dx + 0.5 * dw).min(width);
    let y1 = (gt.y_max() + dy + 0.5 * dh).min(height);
    BBox::new(x0, y0, x1, y1).unwrap_or(*gt)
}

/// Geometric dataset with labeled, featurized, shuffled candidates.
pub fn generate_geometric_dataset(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    if config.mode != SynthMode::Geometric {
        return Err(Error::InvalidConfig("synth: geometric dataset requested in feature_only mode".into()));
    }
    let (width, height) = (config.image_width as f64, config.image_height as f64);
    let records = (0..config.num_images)
        .map(|j| {
            let mut rng = StreamRng::new(config.seed, j as u64 + 1);
            let (lo, hi) = config.objects_per_image;
            let objects = lo + rng.index(hi - lo + 1);
            let groundtruth: Vec<GroundTruthObject> = (0..objects)
                .map(|_| {
                    let class = rng.index(config.classes);
                    let w = width * rng.range(0.15, 0.5);
                    let h = height * rng.range(0.15, 0.5);
                    let x0 = rng.range(0.0, width - w);
                    let y0 = rng.range(0.0, height - h);
                    GroundTruthObject {
                        class_label: format!("class{class}"),
                        bbox: BBox::new(x0, y0, x0 + w, y0 + h).expect("box inside image"),
                    }
                })
                .collect();

            let n = config.candidates_per_image;
            let mut boxes = Vec::with_capacity(n);
            'copies: for gt in &groundtruth {
                for _ in 0..config.copies_per_object {
                    if boxes.len() == n {
                        break 'copies;
                    }
                    boxes.push(jittered(&mut rng, &gt.bbox, config.jitter, width, height));
                }
            }
            while boxes.len() < n {
                boxes.push(uniform_box(&mut rng, width, height));
            }
            rng.shuffle(&mut boxes);

            let record = ImageRecord {
                image_id: image_id(j),
                width: config.image_width,
                height: config.image_height,
                groundtruth,
                candidates: boxes.into_iter().map(Candidate::new).collect(),
            };
            let mut record = label_candidates(&record);
            let sigma = config.noise_sigma;
            for c in &mut record.candidates {
                let y = c.iou_label.expect("labeled above");
                let (cx, cy) = c.bbox.center();
                let mut x = Vec::with_capacity(config.feature_dim);
                x.push(1.0);
                x.push(y + sigma * rng.normal());
                x.push(c.bbox.width() / width + sigma * rng.normal());
                x.push(c.bbox.height() / height + sigma * rng.normal());
                x.push(cx / width + sigma * rng.normal());
                x.push(cy / height + sigma * rng.normal());
                while x.len() < config.feature_dim {
                    x.push(sigma * rng.normal());
                }
                c.features = Some(FeatureVector::new(x)?);
            }
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(records)
}

/// Generates according to `config.mode`, with matching sidecar metadata.
pub fn generate(config: &SynthConfig) -> Result<(Dataset, SynthMeta)> {
    let (dataset, planted, layout) = match config.mode {
        SynthMode::FeatureOnly => {
            let (ds, w) = generate_feature_dataset(config)?;
            (ds, Some(Vec::from(w)), "x = (iou_label - 0.5) * planted_weight + noise_sigma * N(0, I)")
        }
        SynthMode::Geometric => (
            generate_geometric_dataset(config)?,
            None,
            "[1, iou_label, box_w / W, box_h / H, center_x / W, center_y / H, noise...] + noise_sigma * N(0, I) on all but the constant",
        ),
    };
    Ok((
        dataset,
        SynthMeta {
            config: config.clone(),
            planted_weight: planted,
            generator: GENERATOR_DESCRIPTION.to_owned(),
            feature_layout: layout.to_owned(),
        },
    ))
}
