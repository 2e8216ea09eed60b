//! Paired evaluation tables: one detection-rate table per IoU threshold and
//! one MABO table, with proposal budgets as columns and one row per ranking
//! source. DR is printed with two decimals and MABO with four.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::{best_overlap_profile, check_inputs, Coverage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    pub proposal_budgets: Vec<usize>,
    pub coverage: Coverage,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: vec![0.5, 0.7, 0.9],
            proposal_budgets: vec![1, 10, 50, 100, 200, 500, 800, 1000],
            coverage: Coverage::Strict,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iou_thresholds.is_empty() || self.proposal_budgets.is_empty() {
            return Err(Error::InvalidConfig("need at least one threshold and one budget".into()));
        }
        if let Some(d) = self.iou_thresholds.iter().find(|d| !(**d > 0.0 && **d <= 1.0)) {
            return Err(Error::InvalidConfig(format!("IoU threshold {d} outside (0, 1]")));
        }
        if self.proposal_budgets[0] == 0 || self.proposal_budgets.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "budgets must be strictly increasing positive integers".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrEntry {
    pub delta: f64,
    pub budget: usize,
    /// Percentage in `[0, 100]`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AboEntry {
    pub class: String,
    pub budget: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaboEntry {
    pub budget: usize,
    pub value: f64,
}

/// All metrics for one ranking source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub source: String,
    pub dataset_digest: String,
    pub config: EvalConfig,
    /// Threshold-major, budgets ascending.
    pub dr: Vec<DrEntry>,
    /// Class-major (sorted by class), budgets ascending.
    pub abo: Vec<AboEntry>,
    pub mabo: Vec<MaboEntry>,
    /// Groundtruth objects per class.
    pub counts: BTreeMap<String, usize>,
}

impl EvalReport {
    pub fn evaluate(dataset: &Dataset, rankings: &[Vec<usize>], config: &EvalConfig, source: &str) -> Result<Self> {
        config.validate()?;
        let budgets = &config.proposal_budgets;
        check_inputs(dataset, rankings, budgets[0])?;

        let deltas = &config.iou_thresholds;
        let mut covered = vec![0usize; deltas.len() * budgets.len()];
        let mut total = 0usize;
        let mut class_sums: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();

        for (record, ranking) in dataset.records().iter().zip(rankings) {
            for gt in &record.groundtruth {
                let profile = best_overlap_profile(gt, record, ranking, budgets);
                for (di, &delta) in deltas.iter().enumerate() {
                    for (bi, &overlap) in profile.iter().enumerate() {
                        covered[di * budgets.len() + bi] += config.coverage.covers(overlap, delta) as usize;
                    }
                }
                let sums = class_sums
                    .entry(gt.class_label.clone())
                    .or_insert_with(|| vec![0.0; budgets.len()]);
                for (s, o) in sums.iter_mut().zip(&profile) {
                    *s += o;
                }
                *counts.entry(gt.class_label.clone()).or_insert(0) += 1;
                total += 1;
            }
        }

        let dr = deltas
            .iter()
            .enumerate()
            .flat_map(|(di, &delta)| {
                let covered = &covered;
                budgets.iter().enumerate().map(move |(bi, &budget)| DrEntry {
                    delta,
                    budget,
                    value: 100.0 * covered[di * budgets.len() + bi] as f64 / total as f64,
                })
            })
            .collect();

        let mut abo = Vec::new();
        for (class, sums) in &class_sums {
            let n = counts[class] as f64;
            for (&budget, s) in budgets.iter().zip(sums) {
                abo.push(AboEntry {
                    class: class.clone(),
                    budget,
                    value: s / n,
                });
            }
        }
        let classes = class_sums.len();
        let mabo = budgets
            .iter()
            .enumerate()
            .map(|(bi, &budget)| MaboEntry {
                budget,
                value: abo
                    .iter()
                    .skip(bi)
                    .step_by(budgets.len())
                    .map(|e| e.value)
                    .sum::<f64>()
                    / classes as f64,
            })
            .collect();

        Ok(EvalReport {
            source: source.to_owned(),
            dataset_digest: dataset.digest(),
            config: config.clone(),
            dr,
            abo,
            mabo,
            counts,
        })
    }

    pub fn dr_at(&self, delta: f64, budget: usize) -> Option<f64> {
        self.dr
            .iter()
            .find(|e| e.delta == delta && e.budget == budget)
            .map(|e| e.value)
    }

    pub fn mabo_at(&self, budget: usize) -> Option<f64> {
        self.mabo.iter().find(|e| e.budget == budget).map(|e| e.value)
    }
}

/// Two sources evaluated on the same groundtruth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportPair {
    pub reports: [EvalReport; 2],
}

impl ReportPair {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pair: ReportPair = serde_json::from_str(text)?;
        if pair.reports[0].config.proposal_budgets != pair.reports[1].config.proposal_budgets
            || pair.reports[0].config.iou_thresholds != pair.reports[1].config.iou_thresholds
        {
            return Err(Error::InvalidInput("paired reports use different configurations".into()));
        }
        Ok(pair)
    }
}

/// Evaluates two rankings of the same dataset, labelled with `sources`.
pub fn report(
    dataset: &Dataset,
    rankings_a: &[Vec<usize>],
    rankings_b: &[Vec<usize>],
    config: &EvalConfig,
    sources: [&str; 2],
) -> Result<ReportPair> {
    Ok(ReportPair {
        reports: [
            EvalReport::evaluate(dataset, rankings_a, config, sources[0])?,
            EvalReport::evaluate(dataset, rankings_b, config, sources[1])?,
        ],
    })
}

fn table(out: &mut String, title: &str, budgets: &[usize], rows: &[(&str, Vec<String>)]) {
    let label_w = rows
        .iter()
        .map(|(name, _)| name.len())
        .chain(std::iter::once("Algorithms".len()))
        .max()
        .unwrap_or(0);
    let widths: Vec<usize> = budgets
        .iter()
        .enumerate()
        .map(|(i, b)| {
            rows.iter()
                .map(|(_, cells)| cells[i].len())
                .chain(std::iter::once(b.to_string().len()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<label_w$}", "Algorithms");
    for (b, w) in budgets.iter().zip(&widths) {
        let _ = write!(out, "  {:>w$}", b);
    }
    out.push('\n');
    for (name, cells) in rows {
        let _ = write!(out, "{:<label_w$}", name);
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", c);
        }
        out.push('\n');
    }
}

/// Aligned text tables, one DR table per threshold followed by MABO.
pub fn render_text(pair: &ReportPair) -> String {
    let config = &pair.reports[0].config;
    let budgets = &config.proposal_budgets;
    let mut out = String::new();
    for &delta in &config.iou_thresholds {
        let rows: Vec<(&str, Vec<String>)> = pair
            .reports
            .iter()
            .map(|r| {
                let cells = budgets
                    .iter()
                    .map(|&b| format!("{:.2}", r.dr_at(delta, b).unwrap_or(f64::NAN)))
                    .collect();
                (r.source.as_str(), cells)
            })
            .collect();
        table(
            &mut out,
            &format!("Detection rate (%) w.r.t. the number of proposals, IoU threshold {delta}"),
            budgets,
            &rows,
        );
        out.push('\n');
    }
    let rows: Vec<(&str, Vec<String>)> = pair
        .reports
        .iter()
        .map(|r| {
            let cells = budgets
                .iter()
                .map(|&b| format!("{:.4}", r.mabo_at(b).unwrap_or(f64::NAN)))
                .collect();
            (r.source.as_str(), cells)
        })
        .collect();
    table(
        &mut out,
        "Mean average best overlap (MABO) w.r.t. the number of proposals",
        budgets,
        &rows,
    );
    out
}

/// `metric,delta,budget,source,value` rows; MABO rows leave `delta` empty.
pub fn render_csv(pair: &ReportPair) -> String {
    let config = &pair.reports[0].config;
    let mut out = String::from("metric,delta,budget,source,value\n");
    for &delta in &config.iou_thresholds {
        for r in &pair.reports {
            for &b in &config.proposal_budgets {
                let v = r.dr_at(delta, b).unwrap_or(f64::NAN);
                let _ = writeln!(out, "dr,{delta},{b},{},{v:.2}", r.source);
            }
        }
    }
    for r in &pair.reports {
        for &b in &config.proposal_budgets {
            let v = r.mabo_at(b).unwrap_or(f64::NAN);
            let _ = writeln!(out, "mabo,,{b},{},{v:.4}", r.source);
        }
    }
    out
}
