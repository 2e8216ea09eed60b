use serde::{Deserialize, Serialize};

use crate::dataset::{argsort_descending, Dataset, ImageRecord};
use crate::error::{Error, Result};
use crate::features::HogConfig;
use crate::ranking::{dot, FeasibilityReport, Formulation, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite weight".into()));
        }
        Ok(WeightVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        WeightVector(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_digest: String,
    /// RFC 3339 creation time.
    pub created: String,
}

impl Provenance {
    pub fn now(dataset_digest: String) -> Self {
        Provenance {
            dataset_digest,
            created: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// A learned linear scorer plus what it took to produce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub weights: WeightVector,
    pub feature_dim: usize,
    pub config: TrainingConfig,
    #[serde(default = "default_formulation")]
    pub formulation: Formulation,
    pub final_objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hog_config: Option<HogConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
    pub provenance: Provenance,
}

fn default_formulation() -> Formulation {
    Formulation::Partial
}

impl TrainedModel {
    /// A model that scores every candidate 0.
    pub fn zero(feature_dim: usize) -> Self {
        TrainedModel {
            weights: WeightVector::zeros(feature_dim),
            feature_dim,
            config: TrainingConfig::default(),
            formulation: Formulation::Partial,
            final_objective: 0.0,
            hog_config: None,
            feasibility: None,
            provenance: Provenance {
                dataset_digest: String::new(),
                created: String::new(),
            },
        }
    }

    pub fn with_weights(weights: WeightVector) -> Self {
        TrainedModel {
            feature_dim: weights.dim(),
            weights,
            ..TrainedModel::zero(0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.dim() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: self.weights.dim(),
            });
        }
        if self.final_objective.is_nan() || self.final_objective < 0.0 {
            return Err(Error::InvalidInput(format!(
                "final objective {} is negative",
                self.final_objective
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// `w · x` for every candidate, in candidate order.
pub fn score(model: &TrainedModel, record: &ImageRecord) -> Result<Vec<f64>> {
    let w = model.weights.as_slice();
    record
        .feature_rows()?
        .into_iter()
        .map(|x| {
            if x.len() != w.len() {
                return Err(Error::DimensionMismatch {
                    expected: w.len(),
                    found: x.len(),
                });
            }
            Ok(dot(w, x))
        })
        .collect()
}

/// Candidate indices by descending score; equal scores keep candidate order.
pub fn rerank(model: &TrainedModel, record: &ImageRecord) -> Result<Vec<usize>> {
    Ok(argsort_descending(&score(model, record)?))
}

/// Reorders the candidates by score. Each output candidate remembers its
/// ingestion position; positions recorded by an earlier re-rank are kept.
pub fn rerank_record(model: &TrainedModel, record: &ImageRecord) -> Result<ImageRecord> {
    let order = rerank(model, record)?;
    let mut out = record.clone();
    out.candidates = order
        .iter()
        .map(|&i| {
            let mut c = record.candidates[i].clone();
            c.original_index.get_or_insert(i);
            c
        })
        .collect();
    Ok(out)
}

pub fn rerank_dataset(model: &TrainedModel, dataset: &Dataset) -> Result<Dataset> {
    let records = dataset
        .records()
        .iter()
        .map(|r| rerank_record(model, r))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranking::test_support::featured;
    use proptest::prelude::*;

    fn record() -> ImageRecord {
        featured(
            "a",
            &[
                (0.1, vec![0.1, 5.0]),
                (0.2, vec![0.9, -1.0]),
                (0.3, vec![0.5, 2.0]),
            ],
        )
    }

    fn model(w: Vec<f64>) -> TrainedModel {
        TrainedModel::with_weights(WeightVector::new(w).unwrap())
    }

    #[test]
    fn score_examples() {
        let r = record();
        assert_eq!(score(&model(vec![0.0, 0.0]), &r).unwrap(), vec![0.0; 3]);
        assert_eq!(score(&model(vec![1.0, 0.0]), &r).unwrap(), vec![0.1, 0.9, 0.5]);
        assert!(score(&model(vec![1.0]), &r).is_err());
    }

    #[test]
    fn rerank_examples() {
        let r = record();
        assert_eq!(rerank(&model(vec![1.0, 0.0]), &r).unwrap(), vec![1, 2, 0]);
        assert_eq!(rerank(&model(vec![0.0, 0.0]), &r).unwrap(), vec![0, 1, 2]);
        let w = model(vec![0.3, -0.7]);
        let w3 = TrainedModel::with_weights(w.weights.scaled(3.0).unwrap());
        assert_eq!(rerank(&w, &r).unwrap(), rerank(&w3, &r).unwrap());
    }

    #[test]
    fn rerank_record_keeps_first_original_index() {
        let m = model(vec![1.0, 0.0]);
        let once = rerank_record(&m, &record()).unwrap();
        let idx: Vec<_> = once.candidates.iter().map(|c| c.original_index).collect();
        assert_eq!(idx, vec![Some(1), Some(2), Some(0)]);
        let twice = rerank_record(&m, &once).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn model_json_round_trip() {
        let mut m = model(vec![0.1234567890123456, -3.0e-7]);
        m.hog_config = Some(HogConfig::default());
        let text = m.to_json().unwrap();
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["weights", "feature_dim", "config", "final_objective", "hog_config", "provenance"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["config"].get("C").is_some());
        let bad = text.replace("\"feature_dim\": 2", "\"feature_dim\": 3");
        assert!(TrainedModel::from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn zero_weights_give_identity(n in 1usize..30) {
            let rows: Vec<(f64, Vec<f64>)> = (0..n).map(|i| (0.0, vec![i as f64 - 3.0, 1.0])).collect();
            let r = featured("z", &rows);
            prop_assert_eq!(rerank(&model(vec![0.0, 0.0]), &r).unwrap(), (0..n).collect::<Vec<_>>());
        }
    }
}
