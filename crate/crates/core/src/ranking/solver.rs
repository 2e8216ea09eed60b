//! Deterministic subgradient descent over per-image loss terms.
//!
//! The objective splits as `sum_j f_j(w)` with
//! `f_j(w) = ||w||^2 / (2N) + C · loss_j(w)`. Each epoch visits the images in
//! dataset order and steps along a subgradient of one `f_j` with step size
//! `eta_t = eta_0 / (1 + decay · t)`. The full objective is evaluated after
//! every epoch and the best iterate seen so far is returned, so the result
//! never scores worse than `w = 0`.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ranking::model::{Provenance, TrainedModel, WeightVector};
use crate::ranking::objective::{margin_terms, pair_terms, require_dim, total_objective, ImageTerm};
use crate::ranking::{build_partial_constraints, feasibility, Formulation, MarginMode, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStat {
    pub epoch: usize,
    /// Objective at the iterate reached by the end of the epoch.
    pub objective: f64,
    /// Smallest objective seen so far, including `w = 0`.
    pub best_objective: f64,
    pub step_size: f64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub model: TrainedModel,
    pub history: Vec<EpochStat>,
    pub converged: bool,
}

/// Trains the partial top-k model.
pub fn train_soft_margin(dataset: &Dataset, config: &TrainingConfig) -> Result<TrainedModel> {
    train(dataset, config, Formulation::Partial).map(|o| o.model)
}

/// Trains the all-pairs baseline with one hinge per ordered pair.
pub fn train_full_rank_baseline(dataset: &Dataset, config: &TrainingConfig) -> Result<TrainedModel> {
    train(dataset, config, Formulation::Full).map(|o| o.model)
}

pub fn train(dataset: &Dataset, config: &TrainingConfig, formulation: Formulation) -> Result<TrainingOutcome> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    let dim = require_dim(dataset)?;
    for record in dataset.records() {
        let rows = record.feature_rows()?;
        if rows.iter().any(|x| x.iter().any(|v| !v.is_finite())) {
            return Err(Error::record(&record.image_id, "non-finite feature value"));
        }
    }

    let (terms, partitions) = match formulation {
        Formulation::Partial => {
            let partitions = dataset
                .records()
                .iter()
                .map(|r| build_partial_constraints(r, config))
                .collect::<Result<Vec<_>>>()?;
            (margin_terms(dataset, &partitions, config.slack)?, Some(partitions))
        }
        Formulation::Full => (pair_terms(dataset)?, None),
    };

    let c = config.effective_c();
    let run = descend(&terms, dim, c, config)?;

    let report = match (&partitions, config.mode) {
        (Some(parts), MarginMode::Hard) => Some(feasibility(&run.weights, dataset, parts)?),
        _ => None,
    };
    let model = TrainedModel {
        weights: WeightVector::new(run.weights)?,
        feature_dim: dim,
        config: config.clone(),
        formulation,
        final_objective: run.best_objective,
        hog_config: None,
        feasibility: report,
        provenance: Provenance::now(dataset.digest()),
    };
    Ok(TrainingOutcome {
        model,
        history: run.history,
        converged: run.converged,
    })
}

struct Run {
    weights: Vec<f64>,
    best_objective: f64,
    history: Vec<EpochStat>,
    converged: bool,
}

fn descend(terms: &[ImageTerm], dim: usize, c: f64, config: &TrainingConfig) -> Result<Run> {
    let n_images = terms.len() as f64;
    let eta0 = config.initial_step(terms.len());
    let mut w = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut scores = Vec::new();
    let mut coef = Vec::new();

    let mut best_w = w.clone();
    let mut best = total_objective(terms, &w, c, &mut scores);
    let mut history = Vec::with_capacity(config.epochs.min(1 << 16));
    let mut converged = false;
    let mut t = 0u64;

    for epoch in 1..=config.epochs {
        let mut max_grad_sq: f64 = 0.0;
        let mut eta = eta0;
        for term in terms {
            eta = eta0 / (1.0 + config.decay * t as f64);
            t += 1;
            term.loss(&w, &mut scores, Some(&mut coef));
            for (g, wi) in grad.iter_mut().zip(&w) {
                *g = wi / n_images;
            }
            term.accumulate(&coef, c, &mut grad);
            let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
            max_grad_sq = max_grad_sq.max(grad_sq);
            for (wi, g) in w.iter_mut().zip(&grad) {
                *wi -= eta * g;
            }
        }

        let current = total_objective(terms, &w, c, &mut scores);
        if !current.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("objective diverged at epoch {epoch}")));
        }
        if current < best {
            best = current;
            best_w.copy_from_slice(&w);
        }
        history.push(EpochStat {
            epoch,
            objective: current,
            best_objective: best,
            step_size: eta,
        });
        // one step moves the objective by at most about eta * |g|^2
        if eta * max_grad_sq <= config.convergence_tol * best {
            converged = true;
            break;
        }
    }

    Ok(Run {
        weights: best_w,
        best_objective: best,
        history,
        converged,
    })
}
