//! Partial top-k re-ranking of object proposals.
//!
//! A candidate set produced by an upstream proposal generator is labeled with
//! its IoU against the groundtruth, described by HOG features, and re-scored by
//! a linear model trained so that the k best candidates of every training image
//! outscore the low-ranked remainder. Evaluation uses Detection Rate and MABO.
//!
//! Module map:
//!
//! * [`geometry`]: boxes and IoU.
//! * [`dataset`]: image records, JSON Lines I/O, IoU labeling.
//! * [`features`]: grayscale patches, PGM loading, HOG descriptors.
//! * [`ranking`]: constraint construction, objective, subgradient solver, scoring.
//! * [`metrics`]: best overlap, detection rate, ABO/MABO, report tables.
//! * [`synth`]: seeded synthetic datasets with planted structure.

pub mod dataset;
pub mod error;
pub mod features;
pub mod geometry;
pub mod metrics;
pub mod ranking;
pub mod synth;

pub use dataset::{Candidate, Dataset, FeatureVector, GroundTruthObject, ImageRecord};
pub use error::{Error, ErrorKind, Result};
pub use geometry::{iou, BBox};
pub use metrics::{EvalConfig, EvalReport};

pub use ranking::{TrainedModel, TrainingConfig, WeightVector};
