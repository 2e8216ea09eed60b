use std::collections::HashMap;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::dataset::{Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::features::{crop_and_resize, hog, GrayImage, HogConfig};

/// Supplies the raster for an image id.
pub trait ImageSource: Sync {
    fn load(&self, image_id: &str) -> Result<GrayImage>;
}

/// Images stored as `<dir>/<image_id>.pgm`.
#[derive(Debug, Clone)]
pub struct PgmDirectory {
    root: PathBuf,
}

impl PgmDirectory {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        PgmDirectory { root: root.into() }
    }
}

impl ImageSource for PgmDirectory {
    fn load(&self, image_id: &str) -> Result<GrayImage> {
        let path = self.root.join(format!("{image_id}.pgm"));
        let file = std::fs::File::open(&path).map_err(|e| Error::Image {
            image_id: image_id.to_owned(),
            reason: format!("{}: {e}", path.display()),
        })?;
        GrayImage::read_pgm(std::io::BufReader::new(file)).map_err(|e| Error::Image {
            image_id: image_id.to_owned(),
            reason: e.to_string(),
        })
    }
}

impl ImageSource for HashMap<String, GrayImage> {
    fn load(&self, image_id: &str) -> Result<GrayImage> {
        self.get(image_id).cloned().ok_or_else(|| Error::Image {
            image_id: image_id.to_owned(),
            reason: "image not found".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturizeFailure {
    pub image_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct FeaturizeOutcome {
    pub dataset: Dataset,
    /// Records that could not be featurized; they are passed through unchanged.
    pub failures: Vec<FeaturizeFailure>,
}

/// Attaches a HOG descriptor to every candidate.
///
/// With `keep_existing`, records whose candidates all carry features already
/// are passed through untouched and their images are never loaded. A record
/// whose image is missing or unreadable is reported and left unchanged; the
/// remaining records are still processed.
pub fn featurize_dataset(
    dataset: &Dataset,
    images: &dyn ImageSource,
    config: &HogConfig,
    keep_existing: bool,
) -> Result<FeaturizeOutcome> {
    config.validate()?;
    let results: Vec<std::result::Result<ImageRecord, FeaturizeFailure>> = dataset
        .records()
        .par_iter()
        .map(|record| {
            let complete = record.candidates.iter().all(|c| c.features.is_some());
            if keep_existing && complete {
                return Ok(record.clone());
            }
            featurize_record(record, images, config).map_err(|e| FeaturizeFailure {
                image_id: record.image_id.clone(),
                reason: e.to_string(),
            })
        })
        .collect();

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (r, original) in results.into_iter().zip(dataset.records()) {
        match r {
            Ok(rec) => records.push(rec),
            Err(failure) => {
                records.push(original.clone());
                failures.push(failure);
            }
        }
    }
    Ok(FeaturizeOutcome {
        dataset: Dataset::new(records)?,
        failures,
    })
}

fn featurize_record(record: &ImageRecord, images: &dyn ImageSource, config: &HogConfig) -> Result<ImageRecord> {
    let image = images.load(&record.image_id)?;
    if image.width() != record.width as usize || image.height() != record.height as usize {
        return Err(Error::Image {
            image_id: record.image_id.clone(),
            reason: format!(
                "raster is {}x{} but the record declares {}x{}",
                image.width(),
                image.height(),
                record.width,
                record.height
            ),
        });
    }
    let mut out = record.clone();
    for c in &mut out.candidates {
        let patch = crop_and_resize(&image, &c.bbox, config)?;
        c.features = Some(hog(&patch, config)?);
    }
    Ok(out)
}
