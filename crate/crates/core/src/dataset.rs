//! Image records, the JSON Lines dataset format, and IoU labeling.
//!
//! One line per image:
//!
//! ```text
//! {"image_id": "...", "width": 500, "height": 375,
//!  "groundtruth": [{"class": "dog", "box": [x_min, y_min, x_max, y_max]}],
//!  "candidates": [{"box": [...], "iou_label": 0.42, "features": [...]}]}
//! ```
//!
//! Field order is free and unknown fields are ignored. Candidate order is the
//! upstream generator's ranking and is never changed by reading or labeling.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{iou, BBox};

/// A dense descriptor attached to one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite feature value at component {i}"
            )));
        }
        Ok(FeatureVector(values))
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<FeatureVector> for Vec<f64> {
    fn from(v: FeatureVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    #[serde(rename = "class")]
    pub class_label: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(rename = "box")]
    pub bbox: BBox,
    /// IoU with the best-matching groundtruth object; absent until labeled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iou_label: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureVector>,
    /// Position in the ingestion order, recorded when a dataset is re-ranked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_index: Option<usize>,
}

impl Candidate {
    pub fn new(bbox: BBox) -> Self {
        Candidate {
            bbox,
            iou_label: None,
            features: None,
            original_index: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub groundtruth: Vec<GroundTruthObject>,
    #[serde(default)]
    pub candidates: Vec<Candidate>,
}

impl ImageRecord {
    pub fn num_candidates(&self) -> usize {
        self.candidates.len()
    }

    /// Checks bounds, label ranges, and feature finiteness.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::record(&self.image_id, reason));
        if self.image_id.is_empty() {
            return Err(Error::InvalidInput("empty image_id".into()));
        }
        if self.width == 0 || self.height == 0 {
            return fail("image has zero width or height".into());
        }
        let (w, h) = (self.width as f64, self.height as f64);
        for (i, gt) in self.groundtruth.iter().enumerate() {
            if gt.class_label.is_empty() {
                return fail(format!("groundtruth {i} has an empty class label"));
            }
            if !gt.bbox.within(w, h) {
                return fail(format!("groundtruth {i} box {:?} out of bounds", gt.bbox.to_array()));
            }
        }
        for (i, c) in self.candidates.iter().enumerate() {
            if !c.bbox.within(w, h) {
                return fail(format!("candidate {i} box {:?} out of bounds", c.bbox.to_array()));
            }
            if let Some(y) = c.iou_label {
                if !(0.0..=1.0).contains(&y) {
                    return fail(format!("candidate {i} iou_label {y} outside [0, 1]"));
                }
            }
            if let Some(f) = &c.features {
                if !f.is_finite() {
                    return fail(format!("candidate {i} has non-finite features"));
                }
            }
        }
        Ok(())
    }

    /// Labels as a slice-friendly vector, or an error naming the record if
    /// any candidate is unlabeled.
    pub fn labels(&self) -> Result<Vec<f64>> {
        self.candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.iou_label
                    .ok_or_else(|| Error::record(&self.image_id, format!("candidate {i} is unlabeled")))
            })
            .collect()
    }

    /// Borrowed feature rows, or an error if any candidate lacks features.
    pub fn feature_rows(&self) -> Result<Vec<&[f64]>> {
        self.candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.features.as_ref().map(|f| f.as_slice()).ok_or_else(|| {
                    Error::record(&self.image_id, format!("candidate {i} has no features"))
                })
            })
            .collect()
    }

    fn feature_dim(&self) -> Result<Option<usize>> {
        let mut dim = None;
        for c in &self.candidates {
            if let Some(f) = &c.features {
                match dim {
                    None => dim = Some(f.dim()),
                    Some(d) if d != f.dim() => {
                        return Err(Error::record(
                            &self.image_id,
                            format!("mixed feature dimensions {d} and {}", f.dim()),
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(dim)
    }
}

/// An ordered collection of image records sharing one feature dimension.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    records: Vec<ImageRecord>,
    feature_dim: Option<usize>,
}

impl Dataset {
    /// Validates every record, the uniqueness of image ids, and the
    /// consistency of feature dimensions.
    pub fn new(records: Vec<ImageRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut feature_dim = None;
        for r in &records {
            r.validate()?;
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::record(&r.image_id, "duplicate image_id"));
            }
            feature_dim = merge_dim(feature_dim, r.feature_dim()?, &r.image_id)?;
        }
        Ok(Dataset {
            records,
            feature_dim,
        })
    }

    pub fn records(&self) -> &[ImageRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ImageRecord> {
        self.records
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_groundtruth(&self) -> usize {
        self.records.iter().map(|r| r.groundtruth.len()).sum()
    }

    pub fn num_candidates(&self) -> usize {
        self.records.iter().map(|r| r.candidates.len()).sum()
    }

    pub fn get(&self, image_id: &str) -> Option<&ImageRecord> {
        self.records.iter().find(|r| r.image_id == image_id)
    }

    /// Reads one record per non-blank line. Errors cite the 1-based line.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen = HashSet::new();
        let mut feature_dim = None;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let at_line = |reason: String| Error::Parse {
                line: line_no,
                reason,
            };
            let record: ImageRecord =
                serde_json::from_str(&line).map_err(|e| at_line(e.to_string()))?;
            record.validate().map_err(|e| at_line(e.to_string()))?;
            if !seen.insert(record.image_id.clone()) {
                return Err(at_line(format!("duplicate image_id `{}`", record.image_id)));
            }
            let dim = record.feature_dim().map_err(|e| at_line(e.to_string()))?;
            feature_dim =
                merge_dim(feature_dim, dim, &record.image_id).map_err(|e| at_line(e.to_string()))?;
            records.push(record);
        }
        Ok(Dataset {
            records,
            feature_dim,
        })
    }

    pub fn read_jsonl_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_jsonl(std::io::BufReader::new(file))
    }

    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut writer, r)?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_jsonl(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// SHA-256 of the canonical JSON Lines encoding, hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl_bytes()))
    }

    /// Splits into the first `at` records and the rest.
    pub fn split_at(&self, at: usize) -> Result<(Dataset, Dataset)> {
        let at = at.min(self.records.len());
        let (a, b) = self.records.split_at(at);
        Ok((Dataset::new(a.to_vec())?, Dataset::new(b.to_vec())?))
    }
}

fn merge_dim(current: Option<usize>, next: Option<usize>, image_id: &str) -> Result<Option<usize>> {
    match (current, next) {
        (Some(a), Some(b)) if a != b => Err(Error::record(
            image_id,
            format!("feature dimension {b} differs from dataset dimension {a}"),
        )),
        (Some(a), _) => Ok(Some(a)),
        (None, b) => Ok(b),
    }
}

/// Sets each candidate's label to its best IoU over the groundtruth objects,
/// or 0 when the image has no groundtruth. Candidate order is unchanged.
pub fn label_candidates(record: &ImageRecord) -> ImageRecord {
    let mut out = record.clone();
    for c in &mut out.candidates {
        let best = record
            .groundtruth
            .iter()
            .map(|gt| iou(&c.bbox, &gt.bbox))
            .fold(0.0, f64::max);
        c.iou_label = Some(best);
    }
    out
}

pub fn label_dataset(dataset: &Dataset) -> Dataset {
    let records: Vec<ImageRecord> = dataset.records.par_iter().map(label_candidates).collect();
    Dataset {
        records,
        feature_dim: dataset.feature_dim,
    }
}

/// Candidate indices sorted by descending label; ties keep candidate order.
pub fn rank_by_label(record: &ImageRecord) -> Result<Vec<usize>> {
    let labels = record.labels()?;
    Ok(argsort_descending(&labels))
}

/// Stable descending argsort. Equal values (including `-0.0 == 0.0`) keep
/// their original relative order.
pub fn argsort_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx
}
