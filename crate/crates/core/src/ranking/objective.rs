//! Per-image loss terms and the regularized objective.
//!
//! For image `j` with positives `P` and negatives `Q`, the shared slack is
//! `xi_j = max(0, max_p (1 - w·x_p), max_q (1 + w·x_q))`, the smallest slack
//! meeting every one of the image's margin constraints. The objective is
//! `0.5 ||w||^2 + C · sum_j xi_j`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ranking::{dot, ConstraintPartition, SlackMode, TrainingConfig};

#[derive(Debug, Clone)]
pub(crate) enum TermKind {
    /// Rows `[0, positives)` must score `>= 1`, the rest `<= -1`.
    Margin { positives: usize, slack: SlackMode },
    /// Rows in descending label order; every earlier row must beat every
    /// later one by 1.
    Pairs,
}

/// The feature rows one image contributes, copied into a dense block.
#[derive(Debug, Clone)]
pub(crate) struct ImageTerm {
    rows: Vec<f64>,
    dim: usize,
    kind: TermKind,
}

impl ImageTerm {
    pub(crate) fn margin(rows: Vec<f64>, dim: usize, positives: usize, slack: SlackMode) -> Self {
        ImageTerm {
            rows,
            dim,
            kind: TermKind::Margin { positives, slack },
        }
    }

    pub(crate) fn pairs(rows: Vec<f64>, dim: usize) -> Self {
        ImageTerm {
            rows,
            dim,
            kind: TermKind::Pairs,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows.len() / self.dim.max(1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    /// Loss of this image at `w`. When `coef` is given it receives one
    /// subgradient coefficient per row, so that `sum_i coef[i] · row_i` is a
    /// subgradient of the loss.
    pub(crate) fn loss(&self, w: &[f64], scores: &mut Vec<f64>, coef: Option<&mut Vec<f64>>) -> f64 {
        let n = self.len();
        scores.clear();
        scores.extend((0..n).map(|i| dot(w, self.row(i))));
        let mut coef = coef;
        if let Some(c) = coef.as_deref_mut() {
            c.clear();
            c.resize(n, 0.0);
        }
        match self.kind {
            TermKind::Margin { positives, slack } => {
                let hinge = |i: usize| {
                    if i < positives {
                        1.0 - scores[i]
                    } else {
                        1.0 + scores[i]
                    }
                };
                let sign = |i: usize| if i < positives { -1.0 } else { 1.0 };
                match slack {
                    SlackMode::Shared => {
                        // most violated constraint, first index on ties
                        let mut worst = None;
                        let mut xi = 0.0;
                        for i in 0..n {
                            let h = hinge(i);
                            if h > xi {
                                xi = h;
                                worst = Some(i);
                            }
                        }
                        if let (Some(i), Some(c)) = (worst, coef.as_deref_mut()) {
                            c[i] = sign(i);
                        }
                        xi
                    }
                    SlackMode::PerConstraint => {
                        let mut total = 0.0;
                        for i in 0..n {
                            let h = hinge(i);
                            if h > 0.0 {
                                total += h;
                                if let Some(c) = coef.as_deref_mut() {
                                    c[i] = sign(i);
                                }
                            }
                        }
                        total
                    }
                }
            }
            TermKind::Pairs => {
                let mut total = 0.0;
                for a in 0..n {
                    for b in a + 1..n {
                        let h = 1.0 - (scores[a] - scores[b]);
                        if h > 0.0 {
                            total += h;
                            if let Some(c) = coef.as_deref_mut() {
                                c[a] -= 1.0;
                                c[b] += 1.0;
                            }
                        }
                    }
                }
                total
            }
        }
    }

    /// `out += scale · sum_i coef[i] · row_i`.
    pub(crate) fn accumulate(&self, coef: &[f64], scale: f64, out: &mut [f64]) {
        for (i, &c) in coef.iter().enumerate() {
            if c != 0.0 {
                let s = scale * c;
                for (o, x) in out.iter_mut().zip(self.row(i)) {
                    *o += s * x;
                }
            }
        }
    }
}

pub(crate) fn require_dim(dataset: &Dataset) -> Result<usize> {
    dataset
        .feature_dim()
        .ok_or_else(|| Error::InvalidInput("dataset carries no features".into()))
}

pub(crate) fn margin_terms(
    dataset: &Dataset,
    partitions: &[ConstraintPartition],
    slack: SlackMode,
) -> Result<Vec<ImageTerm>> {
    if partitions.len() != dataset.len() {
        return Err(Error::InvalidInput(format!(
            "{} partitions for {} records",
            partitions.len(),
            dataset.len()
        )));
    }
    let dim = require_dim(dataset)?;
    dataset
        .records()
        .iter()
        .zip(partitions)
        .map(|(record, part)| {
            let feats = record.feature_rows()?;
            let mut rows = Vec::with_capacity((part.positives.len() + part.negatives.len()) * dim);
            for &i in part.positives.iter().chain(&part.negatives) {
                let x = feats.get(i).ok_or_else(|| {
                    Error::record(&record.image_id, format!("partition index {i} out of range"))
                })?;
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: x.len(),
                    });
                }
                rows.extend_from_slice(x);
            }
            Ok(ImageTerm::margin(rows, dim, part.positives.len(), slack))
        })
        .collect()
}

pub(crate) fn pair_terms(dataset: &Dataset) -> Result<Vec<ImageTerm>> {
    let dim = require_dim(dataset)?;
    dataset
        .records()
        .iter()
        .map(|record| {
            let feats = record.feature_rows()?;
            let order = crate::dataset::rank_by_label(record)?;
            let mut rows = Vec::with_capacity(order.len() * dim);
            for &i in &order {
                rows.extend_from_slice(feats[i]);
            }
            Ok(ImageTerm::pairs(rows, dim))
        })
        .collect()
}

pub(crate) fn total_objective(terms: &[ImageTerm], w: &[f64], c: f64, scores: &mut Vec<f64>) -> f64 {
    let reg = 0.5 * dot(w, w);
    let loss: f64 = terms.iter().map(|t| t.loss(w, scores, None)).sum();
    reg + c * loss
}

fn check_weights(w: &[f64], dim: usize) -> Result<()> {
    if w.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: w.len(),
        });
    }
    Ok(())
}

/// `0.5 ||w||^2 + C · sum_j loss_j` for the partial formulation, using the
/// slack mode and effective `C` of `config`.
pub fn objective(
    w: &[f64],
    dataset: &Dataset,
    partitions: &[ConstraintPartition],
    config: &TrainingConfig,
) -> Result<f64> {
    let terms = margin_terms(dataset, partitions, config.slack)?;
    check_weights(w, require_dim(dataset)?)?;
    Ok(total_objective(&terms, w, config.effective_c(), &mut Vec::new()))
}

/// `0.5 ||w||^2 + C · sum over all ordered pairs of max(0, 1 - w·(x_p - x_q))`.
pub fn full_rank_objective(w: &[f64], dataset: &Dataset, c: f64) -> Result<f64> {
    let terms = pair_terms(dataset)?;
    check_weights(w, require_dim(dataset)?)?;
    Ok(total_objective(&terms, w, c, &mut Vec::new()))
}

/// How well a weight vector satisfies the hard-margin constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub constraints: usize,
    /// Margin constraints (`w·x_p >= 1`, `w·x_q <= -1`) that do not hold.
    pub margin_violations: usize,
    /// Largest residual hinge over all margin constraints, 0 when feasible.
    pub max_hinge: f64,
    /// Images whose lowest positive score does not strictly exceed their
    /// highest negative score.
    pub order_violations: usize,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.margin_violations == 0 && self.order_violations == 0
    }
}

pub fn feasibility(w: &[f64], dataset: &Dataset, partitions: &[ConstraintPartition]) -> Result<FeasibilityReport> {
    let terms = margin_terms(dataset, partitions, SlackMode::PerConstraint)?;
    check_weights(w, require_dim(dataset)?)?;
    let mut report = FeasibilityReport {
        constraints: 0,
        margin_violations: 0,
        max_hinge: 0.0,
        order_violations: 0,
    };
    let mut scores = Vec::new();
    for (term, part) in terms.iter().zip(partitions) {
        term.loss(w, &mut scores, None);
        let p = part.positives.len();
        let mut min_pos = f64::INFINITY;
        let mut max_neg = f64::NEG_INFINITY;
        for (i, &s) in scores.iter().enumerate() {
            let h = if i < p {
                min_pos = min_pos.min(s);
                1.0 - s
            } else {
                max_neg = max_neg.max(s);
                1.0 + s
            };
            report.constraints += 1;
            if h > 0.0 {
                report.margin_violations += 1;
                report.max_hinge = report.max_hinge.max(h);
            }
        }
        if p > 0 && scores.len() > p && min_pos <= max_neg {
            report.order_violations += 1;
        }
    }
    Ok(report)
}
