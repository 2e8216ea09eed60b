//! Proposal quality metrics over ranked candidate lists.
//!
//! * best overlap: the highest IoU between a groundtruth box and the first
//!   `m` ranked candidates of its image;
//! * detection rate: percentage of groundtruth objects whose best overlap
//!   exceeds a threshold `delta`;
//! * ABO: mean best overlap over the objects of one class; MABO: the mean ABO
//!   over classes that have at least one object.
//!
//! Every groundtruth object is scored independently; proposals are not
//! matched one-to-one.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, GroundTruthObject, ImageRecord};
use crate::error::{Error, Result};
use crate::geometry::iou;

pub use report::{render_csv, render_text, report, EvalConfig, EvalReport, ReportPair};

/// How a best overlap is compared with the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// `overlap > delta`.
    #[default]
    Strict,
    /// `overlap >= delta`.
    Inclusive,
}

impl Coverage {
    #[inline]
    pub fn covers(self, overlap: f64, delta: f64) -> bool {
        match self {
            Coverage::Strict => overlap > delta,
            Coverage::Inclusive => overlap >= delta,
        }
    }
}

/// Checks that `ranking` is a permutation of `0..n`.
pub fn validate_ranking(ranking: &[usize], n: usize) -> Result<()> {
    if ranking.len() != n {
        return Err(Error::InvalidInput(format!(
            "ranking has {} entries for {n} candidates",
            ranking.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in ranking {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidInput(format!("ranking is not a permutation (index {i})")));
        }
    }
    Ok(())
}

/// The candidates' own order, `0..n`, for every record.
pub fn identity_rankings(dataset: &Dataset) -> Vec<Vec<usize>> {
    dataset
        .records()
        .iter()
        .map(|r| (0..r.num_candidates()).collect())
        .collect()
}

/// Highest IoU between `gt` and the first `min(m, n)` ranked candidates.
pub fn best_overlap(gt: &GroundTruthObject, record: &ImageRecord, ranking: &[usize], m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidInput("proposal budget must be at least 1".into()));
    }
    validate_ranking(ranking, record.num_candidates())?;
    Ok(ranking
        .iter()
        .take(m)
        .map(|&i| iou(&gt.bbox, &record.candidates[i].bbox))
        .fold(0.0, f64::max))
}

/// Best overlap of one object at every budget in `budgets` (ascending), in a
/// single pass over the ranking.
pub(crate) fn best_overlap_profile(
    gt: &GroundTruthObject,
    record: &ImageRecord,
    ranking: &[usize],
    budgets: &[usize],
) -> Vec<f64> {
    let mut out = Vec::with_capacity(budgets.len());
    let mut best: f64 = 0.0;
    let mut taken = 0;
    for &m in budgets {
        while taken < m.min(ranking.len()) {
            best = best.max(iou(&gt.bbox, &record.candidates[ranking[taken]].bbox));
            taken += 1;
        }
        out.push(best);
    }
    out
}

pub(crate) fn check_inputs(dataset: &Dataset, rankings: &[Vec<usize>], m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("proposal budget must be at least 1".into()));
    }
    if rankings.len() != dataset.len() {
        return Err(Error::InvalidInput(format!(
            "{} rankings for {} records",
            rankings.len(),
            dataset.len()
        )));
    }
    for (record, ranking) in dataset.records().iter().zip(rankings) {
        validate_ranking(ranking, record.num_candidates())
            .map_err(|e| Error::record(&record.image_id, e.to_string()))?;
    }
    if dataset.num_groundtruth() == 0 {
        return Err(Error::UndefinedMetric("dataset has no groundtruth objects".into()));
    }
    Ok(())
}

/// Covered and total groundtruth counts at threshold `delta`, budget `m`.
pub fn detection_counts(
    dataset: &Dataset,
    rankings: &[Vec<usize>],
    delta: f64,
    m: usize,
    coverage: Coverage,
) -> Result<(usize, usize)> {
    check_inputs(dataset, rankings, m)?;
    let mut covered = 0;
    let mut total = 0;
    for (record, ranking) in dataset.records().iter().zip(rankings) {
        for gt in &record.groundtruth {
            let overlap = best_overlap_profile(gt, record, ranking, &[m])[0];
            covered += coverage.covers(overlap, delta) as usize;
            total += 1;
        }
    }
    Ok((covered, total))
}

/// Percentage of groundtruth objects covered at threshold `delta` within the
/// top `m` proposals.
pub fn detection_rate(
    dataset: &Dataset,
    rankings: &[Vec<usize>],
    delta: f64,
    m: usize,
    coverage: Coverage,
) -> Result<f64> {
    let (covered, total) = detection_counts(dataset, rankings, delta, m, coverage)?;
    Ok(100.0 * covered as f64 / total as f64)
}

/// Per-class ABO at budget `m` and their unweighted mean.
pub fn mabo(dataset: &Dataset, rankings: &[Vec<usize>], m: usize) -> Result<(BTreeMap<String, f64>, f64)> {
    check_inputs(dataset, rankings, m)?;
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (record, ranking) in dataset.records().iter().zip(rankings) {
        for gt in &record.groundtruth {
            let overlap = best_overlap_profile(gt, record, ranking, &[m])[0];
            let entry = sums.entry(gt.class_label.clone()).or_insert((0.0, 0));
            entry.0 += overlap;
            entry.1 += 1;
        }
    }
    let abo: BTreeMap<String, f64> = sums
        .into_iter()
        .map(|(class, (sum, count))| (class, sum / count as f64))
        .collect();
    let mean = abo.values().sum::<f64>() / abo.len() as f64;
    Ok((abo, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Candidate;
    use crate::geometry::BBox;

    fn bx(v: [f64; 4]) -> BBox {
        BBox::try_from(v).unwrap()
    }

    fn rec(id: &str, gts: &[(&str, [f64; 4])], cands: &[[f64; 4]]) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            width: 100,
            height: 100,
            groundtruth: gts
                .iter()
                .map(|(c, b)| GroundTruthObject {
                    class_label: c.to_string(),
                    bbox: bx(*b),
                })
                .collect(),
            candidates: cands.iter().map(|b| Candidate::new(bx(*b))).collect(),
        }
    }

    #[test]
    fn best_overlap_examples() {
        let r = rec(
            "a",
            &[("cat", [10.0, 10.0, 20.0, 20.0])],
            &[[50.0, 50.0, 60.0, 60.0], [10.0, 10.0, 20.0, 20.0], [10.0, 10.0, 15.0, 20.0]],
        );
        let gt = &r.groundtruth[0];
        assert_eq!(best_overlap(gt, &r, &[0, 1, 2], 1).unwrap(), 0.0);
        assert_eq!(best_overlap(gt, &r, &[0, 1, 2], 2).unwrap(), 1.0);
        assert_eq!(best_overlap(gt, &r, &[0, 1, 2], 99).unwrap(), 1.0);
        assert_eq!(best_overlap(gt, &r, &[2, 0, 1], 1).unwrap(), 0.5);
        assert!(best_overlap(gt, &r, &[0, 0, 1], 1).is_err());
        assert!(best_overlap(gt, &r, &[0, 1], 1).is_err());
        assert!(best_overlap(gt, &r, &[0, 1, 2], 0).is_err());
        let empty = rec("e", &[("cat", [0.0, 0.0, 5.0, 5.0])], &[]);
        assert_eq!(best_overlap(&empty.groundtruth[0], &empty, &[], 3).unwrap(), 0.0);
    }

    #[test]
    fn detection_rate_examples() {
        let exact = Dataset::new(vec![
            rec("a", &[("cat", [10.0, 10.0, 20.0, 20.0])], &[[10.0, 10.0, 20.0, 20.0], [0.0, 0.0, 5.0, 5.0]]),
            rec("b", &[("dog", [30.0, 30.0, 60.0, 50.0])], &[[30.0, 30.0, 60.0, 50.0]]),
        ])
        .unwrap();
        let ids = identity_rankings(&exact);
        for delta in [0.5, 0.7, 0.9, 0.999] {
            assert_eq!(detection_rate(&exact, &ids, delta, 1, Coverage::Strict).unwrap(), 100.0);
        }
        // strict comparison never covers at delta = 1
        assert_eq!(detection_rate(&exact, &ids, 1.0, 1, Coverage::Strict).unwrap(), 0.0);
        assert_eq!(detection_rate(&exact, &ids, 1.0, 1, Coverage::Inclusive).unwrap(), 100.0);

        let disjoint = Dataset::new(vec![rec("a", &[("cat", [10.0, 10.0, 20.0, 20.0])], &[[50.0, 50.0, 70.0, 70.0]])]).unwrap();
        assert_eq!(
            detection_rate(&disjoint, &identity_rankings(&disjoint), 0.5, 10, Coverage::Strict).unwrap(),
            0.0
        );
    }

    #[test]
    fn boundary_overlap_depends_on_coverage_mode() {
        // candidate covers exactly half of the groundtruth: IoU = 0.5
        let ds = Dataset::new(vec![rec("a", &[("cat", [0.0, 0.0, 10.0, 10.0])], &[[0.0, 0.0, 5.0, 10.0]])]).unwrap();
        let ids = identity_rankings(&ds);
        assert_eq!(detection_rate(&ds, &ids, 0.5, 1, Coverage::Strict).unwrap(), 0.0);
        assert_eq!(detection_rate(&ds, &ids, 0.5, 1, Coverage::Inclusive).unwrap(), 100.0);
    }

    #[test]
    fn mabo_examples() {
        let single = Dataset::new(vec![rec("a", &[("cat", [10.0, 10.0, 20.0, 20.0])], &[[10.0, 10.0, 20.0, 20.0]])]).unwrap();
        let (abo, m) = mabo(&single, &identity_rankings(&single), 1).unwrap();
        assert_eq!(abo["cat"], 1.0);
        assert_eq!(m, 1.0);

        // class "a": overlaps 0.2 and 0.2; class "b": 0.8; MABO = (0.2 + 0.8) / 2
        let two = Dataset::new(vec![
            rec("x", &[("a", [0.0, 0.0, 10.0, 10.0])], &[[0.0, 0.0, 2.0, 10.0]]),
            rec("y", &[("a", [0.0, 0.0, 10.0, 10.0]), ("b", [20.0, 0.0, 30.0, 10.0])], &[[0.0, 0.0, 2.0, 10.0], [20.0, 0.0, 28.0, 10.0]]),
        ])
        .unwrap();
        let (abo, m) = mabo(&two, &identity_rankings(&two), 5).unwrap();
        assert!((abo["a"] - 0.2).abs() < 1e-15);
        assert!((abo["b"] - 0.8).abs() < 1e-15);
        assert!((m - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_groundtruth_is_undefined() {
        let ds = Dataset::new(vec![rec("a", &[], &[[0.0, 0.0, 1.0, 1.0]])]).unwrap();
        let ids = identity_rankings(&ds);
        assert!(matches!(
            detection_rate(&ds, &ids, 0.5, 1, Coverage::Strict),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(matches!(mabo(&ds, &ids, 1), Err(Error::UndefinedMetric(_))));
    }
}
