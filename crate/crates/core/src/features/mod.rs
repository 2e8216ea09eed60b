//! Candidate descriptors: grayscale patches, PGM images, and HOG.

mod featurize;
mod hog;
mod image;

pub use featurize::{featurize_dataset, FeaturizeFailure, FeaturizeOutcome, ImageSource, PgmDirectory};
pub use hog::{hog, HogConfig};
pub use image::{crop_and_resize, GrayImage};
