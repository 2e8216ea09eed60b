//! Partial top-k ranking: constraint sets, the large-margin objective, the
//! subgradient solver, and linear scoring.
//!
//! Each training image contributes its `k` best candidates (by IoU label) as
//! positives and its `min(n - k, 2k)` worst candidates as negatives. The model
//! is a homogeneous linear scorer `w · x`; append a constant feature if a bias
//! is wanted.

mod config;
mod constraints;
mod model;
mod objective;
mod solver;

pub use config::{Formulation, MarginMode, SlackMode, TrainingConfig};
pub use constraints::{build_full_constraints, build_partial_constraints, constraint_count, ConstraintPartition};
pub use model::{rerank, rerank_dataset, rerank_record, score, Provenance, TrainedModel, WeightVector};
pub use objective::{feasibility, full_rank_objective, objective, FeasibilityReport};
pub use solver::{train, train_full_rank_baseline, train_soft_margin, EpochStat, TrainingOutcome};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
