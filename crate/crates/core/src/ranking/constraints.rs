use crate::dataset::{rank_by_label, ImageRecord};
use crate::error::{Error, Result};
use crate::ranking::TrainingConfig;

/// Positive and negative candidate indices for one image.
///
/// Both lists are in descending label order; every positive label is at
/// least every negative label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintPartition {
    pub positives: Vec<usize>,
    pub negatives: Vec<usize>,
}

impl ConstraintPartition {
    /// Number of positive-over-negative constraints this partition encodes.
    pub fn num_pairs(&self) -> usize {
        self.positives.len() * self.negatives.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.positives
            .iter()
            .flat_map(move |&p| self.negatives.iter().map(move |&q| (p, q)))
    }
}

/// Splits a labeled record into its top-k and its lowest `min(n - k, 2k)`.
pub fn build_partial_constraints(record: &ImageRecord, config: &TrainingConfig) -> Result<ConstraintPartition> {
    let n = record.num_candidates();
    let k = config.k;
    if n <= k {
        return Err(Error::record(
            &record.image_id,
            format!("needs more than k = {k} candidates, has {n}"),
        ));
    }
    let order = rank_by_label(record)?;
    let cap = config.negatives_cap(n);
    Ok(ConstraintPartition {
        positives: order[..k].to_vec(),
        negatives: order[n - cap..].to_vec(),
    })
}

/// Every pair `(p, q)` where `p` precedes `q` in descending label order.
pub fn build_full_constraints(record: &ImageRecord) -> Result<Vec<(usize, usize)>> {
    let order = rank_by_label(record)?;
    let n = order.len();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (a, &p) in order.iter().enumerate() {
        for &q in &order[a + 1..] {
            pairs.push((p, q));
        }
    }
    Ok(pairs)
}

/// `(k · (n - k), n · (n - 1) / 2)`: the uncapped partial count and the full
/// pairwise count.
pub fn constraint_count(n: u64, k: u64) -> Result<(u64, u64)> {
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!("constraint count needs 1 <= k < n, got n = {n}, k = {k}")));
    }
    Ok((k * (n - k), n * (n - 1) / 2))
}
