//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `PRERANK_BLESS=1` to rewrite the golden report files instead of
//! comparing against them.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use prerank::dataset::{argsort_descending, label_dataset};
use prerank::features::{hog, GrayImage, HogConfig};
use prerank::metrics::{
    detection_counts, identity_rankings, mabo, render_csv, render_text, Coverage, EvalConfig, EvalReport, ReportPair,
};
use prerank::ranking::{
    build_partial_constraints, constraint_count, objective, rerank, rerank_dataset, train_soft_margin, MarginMode,
    TrainedModel, TrainingConfig, WeightVector,
};
use prerank::synth::{generate, generate_feature_dataset, generate_geometric_dataset, StreamRng, SynthConfig, SynthMode};
use prerank::{BBox, Candidate, Dataset, FeatureVector, GroundTruthObject, ImageRecord};

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

/// Positive rows and negative rows of one image.
type ImageRows = (Vec<Vec<f64>>, Vec<Vec<f64>>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "constraint-count identity", Duration::from_secs(1), constraint_counts),
        (2, "solver-oracle agreement", Duration::from_secs(60), solver_oracle),
        (3, "hard-margin feasibility", Duration::from_secs(30), hard_margin),
        (4, "end-to-end re-ranking improvement", Duration::from_secs(120), end_to_end),
        (5, "metric oracle equivalence", Duration::from_secs(10), metric_oracle),
        (6, "ranking invariances", Duration::MAX, ranking_invariances),
        (7, "HOG sanity", Duration::from_secs(5), hog_sanity),
        (8, "determinism and round-trip", Duration::MAX, determinism),
        (9, "report structure", Duration::MAX, report_structure),
    ];
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = out.pass && in_time;
        failures += usize::from(!pass);
        let limit_note = if limit == Duration::MAX {
            String::new()
        } else {
            format!(", limit {:.0} s{}", limit.as_secs_f64(), if in_time { "" } else { " EXCEEDED" })
        };
        println!(
            "criterion {id} [{}] {name}: {} ({:.2} s{limit_note})",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}

fn unit_box() -> BBox {
    BBox::new(0.0, 0.0, 1.0, 1.0).unwrap()
}

fn featured_record(id: &str, rows: Vec<(f64, Vec<f64>)>) -> ImageRecord {
    ImageRecord {
        image_id: id.into(),
        width: 10,
        height: 10,
        groundtruth: vec![],
        candidates: rows
            .into_iter()
            .map(|(label, x)| Candidate {
                iou_label: Some(label),
                features: Some(FeatureVector::new(x).unwrap()),
                ..Candidate::new(unit_box())
            })
            .collect(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stable descending order by insertion sort; deliberately naive.
fn naive_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let pos = order.iter().position(|&j| values[i] > values[j]).unwrap_or(order.len());
        order.insert(pos, i);
    }
    order
}

// ---------------------------------------------------------------- criterion 1

fn constraint_counts() -> Outcome {
    let headline = constraint_count(1000, 20).unwrap();
    if headline != (19600, 499500) {
        return outcome(false, format!("constraint_count(1000, 20) = {headline:?}"));
    }
    let mut checked = 0;
    for n in 2u64..=200 {
        for k in 1..n {
            let (partial, full) = constraint_count(n, k).unwrap();
            // count pairs by enumeration where it is cheap
            let (enum_partial, enum_full) = if n <= 40 {
                let mut p = 0u64;
                let mut f = 0u64;
                for a in 0..n {
                    for b in (a + 1)..n {
                        f += 1;
                        p += u64::from(a < k && b >= k);
                    }
                }
                (p, f)
            } else {
                (k * (n - k), n * (n - 1) / 2)
            };
            if partial != enum_partial || full != enum_full {
                return outcome(false, format!("n = {n}, k = {k}: got ({partial}, {full})"));
            }
            if n >= 3 && k <= n - 2 && partial >= full {
                return outcome(false, format!("n = {n}, k = {k}: partial {partial} not below full {full}"));
            }
            checked += 1;
        }
    }
    outcome(true, format!("(1000, 20) -> (19600, 499500); {checked} (n, k) pairs checked"))
}

// ---------------------------------------------------------------- criterion 2

/// Independent shared-slack objective with its own partition.
struct Instance {
    c: f64,
    images: Vec<ImageRows>,
}

impl Instance {
    fn from_dataset(ds: &Dataset, k: usize, c: f64) -> Self {
        let images = ds
            .records()
            .iter()
            .map(|r| {
                let labels: Vec<f64> = r.candidates.iter().map(|c| c.iou_label.unwrap()).collect();
                let order = naive_order(&labels);
                let n = order.len();
                let cap = (n - k).min(2 * k);
                let row = |i: usize| r.candidates[i].features.as_ref().unwrap().as_slice().to_vec();
                (
                    order[..k].iter().map(|&i| row(i)).collect(),
                    order[n - cap..].iter().map(|&i| row(i)).collect(),
                )
            })
            .collect();
        Instance { c, images }
    }

    fn primal(&self, w: &[f64]) -> f64 {
        let mut total = 0.5 * dot(w, w);
        for (pos, neg) in &self.images {
            let mut xi: f64 = 0.0;
            for x in pos {
                xi = xi.max(1.0 - dot(w, x));
            }
            for x in neg {
                xi = xi.max(1.0 + dot(w, x));
            }
            total += self.c * xi;
        }
        total
    }

    /// Signed constraint rows, grouped by image.
    fn signed_rows(&self) -> Vec<Vec<Vec<f64>>> {
        self.images
            .iter()
            .map(|(pos, neg)| {
                pos.iter()
                    .cloned()
                    .chain(neg.iter().map(|x| x.iter().map(|v| -v).collect()))
                    .collect()
            })
            .collect()
    }

    /// Maximizes the dual `sum(a) - |sum a_c z_c|^2 / 2` over
    /// `a >= 0, sum of a over each image <= C` by accelerated projected
    /// gradient. Returns (best primal value found, dual value): the optimum
    /// lies between them.
    fn dual_bounds(&self) -> (f64, f64) {
        let groups = self.signed_rows();
        let dim = groups.iter().flatten().next().map_or(0, |z| z.len());
        let lipschitz: f64 = groups.iter().flatten().map(|z| dot(z, z)).sum::<f64>().max(1e-12);
        let weights = |a: &[Vec<f64>]| {
            let mut w = vec![0.0; dim];
            for (g, ag) in groups.iter().zip(a) {
                for (z, ai) in g.iter().zip(ag) {
                    for (wi, zi) in w.iter_mut().zip(z) {
                        *wi += ai * zi;
                    }
                }
            }
            w
        };
        let dual = |a: &[Vec<f64>]| {
            let w = weights(a);
            a.iter().flatten().sum::<f64>() - 0.5 * dot(&w, &w)
        };
        let zero: Vec<Vec<f64>> = groups.iter().map(|g| vec![0.0; g.len()]).collect();
        let mut a = zero.clone();
        let mut y = zero;
        let mut t = 1.0f64;
        let mut best_primal = self.primal(&vec![0.0; dim]);
        let mut best_dual = 0.0f64;
        for iter in 0..200_000 {
            let w = weights(&y);
            let next: Vec<Vec<f64>> = groups
                .iter()
                .zip(&y)
                .map(|(g, yg)| {
                    let v: Vec<f64> = g
                        .iter()
                        .zip(yg)
                        .map(|(z, yi)| yi + (1.0 - dot(z, &w)) / lipschitz)
                        .collect();
                    project_capped_simplex(&v, self.c)
                })
                .collect();
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = next
                .iter()
                .zip(&a)
                .map(|(ng, ag)| ng.iter().zip(ag).map(|(n, o)| n + (t - 1.0) / t_next * (n - o)).collect())
                .collect();
            a = next;
            t = t_next;
            if iter % 200 == 0 {
                best_dual = best_dual.max(dual(&a));
                best_primal = best_primal.min(self.primal(&weights(&a)));
                if best_primal - best_dual <= 1e-11 * best_primal {
                    break;
                }
            }
        }
        (best_primal, best_dual)
    }
}

/// Euclidean projection onto `{a >= 0, sum(a) <= cap}`.
fn project_capped_simplex(v: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - cap) / (i + 1) as f64;
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn tiny_instance(rng: &mut StreamRng, index: usize) -> (Dataset, usize) {
    let d = 1 + rng.index(3);
    let images = 1 + rng.index(3);
    let n = 3 + rng.index(4);
    let k = 1 + rng.index(2);
    let records = (0..images)
        .map(|j| {
            let rows = (0..n)
                .map(|_| (rng.uniform(), (0..d).map(|_| rng.normal()).collect()))
                .collect();
            featured_record(&format!("tiny{index}-{j}"), rows)
        })
        .collect();
    (Dataset::new(records).unwrap(), k)
}

fn solver_oracle() -> Outcome {
    // analytic one-dimensional case, plus a dense grid on [-2, 2]
    let one_d = Dataset::new(vec![featured_record("a", vec![(0.9, vec![2.0]), (0.1, vec![-2.0])])]).unwrap();
    let cfg = TrainingConfig { k: 1, epochs: 200_000, ..TrainingConfig::default() };
    let w = train_soft_margin(&one_d, &cfg).unwrap().weights.as_slice()[0];
    let inst = Instance::from_dataset(&one_d, 1, 1.0);
    let grid_w = (0..=40_000)
        .map(|i| -2.0 + 1e-4 * i as f64)
        .min_by(|a, b| inst.primal(&[*a]).partial_cmp(&inst.primal(&[*b])).unwrap())
        .unwrap();
    if (w - 0.5).abs() > 1e-3 || (grid_w - 0.5).abs() > 1e-4 {
        return outcome(false, format!("1-D: solver w = {w}, grid w = {grid_w}"));
    }

    let mut rng = StreamRng::new(2024, 0);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (ds, k) = tiny_instance(&mut rng, i);
        let cfg = TrainingConfig { k, epochs: 100_000, ..TrainingConfig::default() };
        let model = train_soft_margin(&ds, &cfg).unwrap();
        let inst = Instance::from_dataset(&ds, k, cfg.c);
        let ours = inst.primal(model.weights.as_slice());
        let parts: Vec<_> = ds.records().iter().map(|r| build_partial_constraints(r, &cfg).unwrap()).collect();
        let lib = objective(model.weights.as_slice(), &ds, &parts, &cfg).unwrap();
        if (lib - ours).abs() > 1e-12 * ours.max(1.0) || (model.final_objective - ours).abs() > 1e-12 * ours.max(1.0) {
            return outcome(false, format!("instance {i}: objective disagrees with oracle evaluation ({lib} vs {ours})"));
        }
        let (upper, lower) = inst.dual_bounds();
        if upper - lower > 1e-6 * upper {
            return outcome(false, format!("instance {i}: oracle did not certify optimum ({lower}, {upper})"));
        }
        if ours < lower - 1e-9 {
            return outcome(false, format!("instance {i}: solver objective {ours} below dual bound {lower}"));
        }
        let rel = (ours - upper).abs() / upper;
        worst = worst.max(rel);
        if rel > 1e-3 {
            return outcome(false, format!("instance {i}: solver {ours} vs oracle {upper} (relative {rel:.2e})"));
        }
    }
    outcome(true, format!("1-D w = {w:.6}; 20 instances, worst relative gap {worst:.2e}"))
}

// ---------------------------------------------------------------- criterion 3

fn hard_margin() -> Outcome {
    let synth = SynthConfig {
        seed: 3,
        num_images: 50,
        candidates_per_image: 50,
        feature_dim: 16,
        noise_sigma: 0.0,
        ..SynthConfig::default()
    };
    let (ds, _) = generate_feature_dataset(&synth).unwrap();
    let cfg = TrainingConfig { k: 5, mode: MarginMode::Hard, ..TrainingConfig::default() };
    let model = train_soft_margin(&ds, &cfg).unwrap();
    let Some(report) = model.feasibility.clone() else {
        return outcome(false, "hard mode produced no feasibility report");
    };
    let w = model.weights.as_slice();
    let inst = Instance::from_dataset(&ds, 5, 1.0);
    let mut margin_violations = 0;
    let mut order_violations = 0;
    for (pos, neg) in &inst.images {
        let min_pos = pos.iter().map(|x| dot(w, x)).fold(f64::INFINITY, f64::min);
        let max_neg = neg.iter().map(|x| dot(w, x)).fold(f64::NEG_INFINITY, f64::max);
        margin_violations += pos.iter().filter(|x| dot(w, x) < 1.0).count();
        margin_violations += neg.iter().filter(|x| dot(w, x) > -1.0).count();
        order_violations += usize::from(min_pos <= max_neg);
    }
    let pass = report.margin_violations == 0 && margin_violations == 0 && order_violations == 0;
    outcome(
        pass,
        format!(
            "{} constraints, {} margin violations (independent count {margin_violations}), {order_violations} images with min positive <= max negative",
            report.constraints, report.margin_violations
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn geometric(seed: u64, images: usize) -> Dataset {
    generate_geometric_dataset(&SynthConfig {
        seed,
        mode: SynthMode::Geometric,
        num_images: images,
        candidates_per_image: 100,
        noise_sigma: 0.05,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn end_to_end() -> Outcome {
    let train = geometric(41, 200);
    let test = geometric(42, 100);
    let cfg = TrainingConfig { k: 10, ..TrainingConfig::default() };
    let model = train_soft_margin(&train, &cfg).unwrap();
    let reranked = rerank_dataset(&model, &test).unwrap();
    let config = EvalConfig::default();
    let before = EvalReport::evaluate(&test, &identity_rankings(&test), &config, "ingestion").unwrap();
    let after = EvalReport::evaluate(&reranked, &identity_rankings(&reranked), &config, "reranked").unwrap();
    let (dr0, dr1) = (before.dr_at(0.7, 10).unwrap(), after.dr_at(0.7, 10).unwrap());
    let (m0, m1) = (before.mabo_at(10).unwrap(), after.mabo_at(10).unwrap());
    let pass = (20.0..=60.0).contains(&dr0) && dr1 >= dr0 + 10.0 && m1 > m0;
    outcome(
        pass,
        format!("DR@(0.7,10) {dr0:.2}% -> {dr1:.2}%, MABO@10 {m0:.4} -> {m1:.4}"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn oracle_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area = |r: &[f64; 4]| (r[2] - r[0]) * (r[3] - r[1]);
    inter / (area(a) + area(b) - inter)
}

fn int_box(rng: &mut StreamRng, side: usize) -> BBox {
    let x0 = rng.index(side - 1);
    let y0 = rng.index(side - 1);
    let x1 = x0 + 1 + rng.index(side - x0 - 1);
    let y1 = y0 + 1 + rng.index(side - y0 - 1);
    BBox::new(x0 as f64, y0 as f64, x1 as f64, y1 as f64).unwrap()
}

fn random_metric_dataset(rng: &mut StreamRng, index: usize) -> (Dataset, Vec<Vec<usize>>) {
    let side = 9;
    let images = 1 + rng.index(20);
    let mut rankings = Vec::new();
    let records = (0..images)
        .map(|j| {
            let objects = rng.index(4);
            let groundtruth: Vec<GroundTruthObject> = (0..objects)
                .map(|_| GroundTruthObject {
                    class_label: ["cat", "dog", "car", "bus"][rng.index(4)].to_owned(),
                    bbox: int_box(rng, side),
                })
                .collect();
            let n = 1 + rng.index(30);
            let candidates = (0..n)
                .map(|_| {
                    if !groundtruth.is_empty() && rng.uniform() < 0.15 {
                        Candidate::new(groundtruth[rng.index(groundtruth.len())].bbox)
                    } else {
                        Candidate::new(int_box(rng, side))
                    }
                })
                .collect();
            let mut ranking: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut ranking);
            rankings.push(ranking);
            ImageRecord {
                image_id: format!("m{index}-{j}"),
                width: side as u32,
                height: side as u32,
                groundtruth,
                candidates,
            }
        })
        .collect();
    (Dataset::new(records).unwrap(), rankings)
}

fn metric_oracle() -> Outcome {
    let deltas = [0.25, 0.5, 0.7, 0.9, 1.0];
    let budgets = [1usize, 2, 5, 10, 20, 30, 50];
    let mut rng = StreamRng::new(55, 0);
    let mut checked = 0usize;
    let mut datasets = 0;
    while datasets < 20 {
        let (ds, rankings) = random_metric_dataset(&mut rng, datasets);
        if ds.num_groundtruth() == 0 {
            continue;
        }
        datasets += 1;
        // brute force: best overlap per object per budget
        let mut best: Vec<(String, Vec<f64>)> = Vec::new();
        for (r, ranking) in ds.records().iter().zip(&rankings) {
            for gt in &r.groundtruth {
                let g = gt.bbox.to_array();
                let per_budget = budgets
                    .iter()
                    .map(|&m| {
                        ranking
                            .iter()
                            .take(m)
                            .map(|&i| oracle_iou(&g, &r.candidates[i].bbox.to_array()))
                            .fold(0.0, f64::max)
                    })
                    .collect();
                best.push((gt.class_label.clone(), per_budget));
            }
        }
        for (bi, &m) in budgets.iter().enumerate() {
            for &delta in &deltas {
                for (coverage, covers) in [
                    (Coverage::Strict, (|o: f64, d: f64| o > d) as fn(f64, f64) -> bool),
                    (Coverage::Inclusive, |o: f64, d: f64| o >= d),
                ] {
                    let expected = best.iter().filter(|(_, b)| covers(b[bi], delta)).count();
                    let got = detection_counts(&ds, &rankings, delta, m, coverage).unwrap();
                    if got != (expected, best.len()) {
                        return outcome(false, format!("dataset {datasets}: DR counts at ({delta}, {m}) {got:?} vs {expected}"));
                    }
                    checked += 1;
                }
            }
            let mut classes: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
            for (class, b) in &best {
                let e = classes.entry(class).or_insert((0.0, 0));
                e.0 += b[bi];
                e.1 += 1;
            }
            let abo: Vec<f64> = classes.values().map(|(s, c)| s / *c as f64).collect();
            let expected = abo.iter().sum::<f64>() / abo.len() as f64;
            let (_, got) = mabo(&ds, &rankings, m).unwrap();
            if (got - expected).abs() > 1e-12 {
                return outcome(false, format!("dataset {datasets}: MABO at {m}: {got} vs {expected}"));
            }
            checked += 1;
        }

        let config = EvalConfig {
            iou_thresholds: deltas.to_vec(),
            proposal_budgets: budgets.to_vec(),
            coverage: Coverage::Strict,
        };
        let rep = EvalReport::evaluate(&ds, &rankings, &config, "random").unwrap();
        for &delta in &deltas {
            for w in budgets.windows(2) {
                if rep.dr_at(delta, w[1]).unwrap() < rep.dr_at(delta, w[0]).unwrap() {
                    return outcome(false, format!("DR decreases in m at delta {delta}"));
                }
            }
        }
        for &m in &budgets {
            for d in deltas.windows(2) {
                if rep.dr_at(d[1], m).unwrap() > rep.dr_at(d[0], m).unwrap() {
                    return outcome(false, format!("DR increases in delta at m {m}"));
                }
            }
        }
        for w in budgets.windows(2) {
            if rep.mabo_at(w[1]).unwrap() < rep.mabo_at(w[0]).unwrap() {
                return outcome(false, "MABO decreases in m");
            }
        }
    }
    outcome(true, format!("20 datasets, {checked} metric values equal to brute force; monotone in m and delta"))
}

// ---------------------------------------------------------------- criterion 6

fn ranking_invariances() -> Outcome {
    let mut rng = StreamRng::new(66, 0);
    for trial in 0..50 {
        let d = 1 + rng.index(6);
        let n = 1 + rng.index(40);
        let rows = (0..n).map(|_| (0.5, (0..d).map(|_| rng.normal()).collect())).collect();
        let record = featured_record("r", rows);
        let w: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let base = rerank(&TrainedModel::with_weights(WeightVector::new(w.clone()).unwrap()), &record).unwrap();
        for alpha in [0.5, 1.0, 3.0, 100.0] {
            let scaled: Vec<f64> = w.iter().map(|v| alpha * v).collect();
            let got = rerank(&TrainedModel::with_weights(WeightVector::new(scaled).unwrap()), &record).unwrap();
            if got != base {
                return outcome(false, format!("trial {trial}: scaling by {alpha} changed the order"));
            }
        }
        let zero = rerank(&TrainedModel::zero(d), &record).unwrap();
        if zero != (0..n).collect::<Vec<_>>() {
            return outcome(false, format!("trial {trial}: zero weights did not give the identity"));
        }
    }
    for trial in 0..1000 {
        let n = 1 + rng.index(30);
        // few distinct values so ties are common
        let scores: Vec<f64> = (0..n).map(|_| rng.index(5) as f64 - 2.0).collect();
        let expected = naive_order(&scores);
        if argsort_descending(&scores) != expected {
            return outcome(false, format!("score vector {trial}: argsort is not stable"));
        }
        let record = featured_record("s", scores.iter().map(|s| (0.5, vec![*s])).collect());
        let via_model = rerank(&TrainedModel::with_weights(WeightVector::new(vec![1.0]).unwrap()), &record).unwrap();
        if via_model != expected {
            return outcome(false, format!("score vector {trial}: rerank tie-break is not stable"));
        }
    }
    outcome(true, "scale invariance for alpha in {0.5, 1, 3, 100} on 50 records; w = 0 is identity; 1000 tie-heavy vectors sorted stably")
}

// ---------------------------------------------------------------- criterion 7

fn hog_sanity() -> Outcome {
    let config = HogConfig::default();
    let (w, h) = (config.resize_w, config.resize_h);
    let constant = hog(&GrayImage::constant(w, h, 0.37).unwrap(), &config).unwrap();
    if constant.dim() != 1080 || config.descriptor_len() != 1080 {
        return outcome(false, format!("dimension {}", constant.dim()));
    }
    if constant.as_slice().iter().any(|v| *v != 0.0) {
        return outcome(false, "constant patch gave a nonzero descriptor");
    }
    let mut rng = StreamRng::new(77, 0);
    let mut worst_shift: f64 = 0.0;
    for trial in 0..20 {
        let pixels: Vec<f64> = (0..w * h).map(|_| rng.range(0.1, 0.8)).collect();
        let patch = GrayImage::new(w, h, pixels.clone()).unwrap();
        let shifted = GrayImage::new(w, h, pixels.iter().map(|p| p + 0.15).collect()).unwrap();
        let a = hog(&patch, &config).unwrap();
        let b = hog(&shifted, &config).unwrap();
        if a.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return outcome(false, format!("patch {trial}: value outside [0, 1]"));
        }
        let diff = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst_shift = worst_shift.max(diff);
    }
    let pass = worst_shift <= 1e-10;
    outcome(pass, format!("dimension 1080, constant patch -> 0, values in [0, 1], brightness shift max diff {worst_shift:.1e}"))
}

// ---------------------------------------------------------------- criterion 8

struct PipelineBytes {
    synth: Vec<u8>,
    labeled: Vec<u8>,
    model: String,
    reranked: Vec<u8>,
    report: String,
}

fn strip_timestamp(model_json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(model_json).unwrap();
    v["provenance"]["created"] = serde_json::Value::String(String::new());
    serde_json::to_string_pretty(&v).unwrap()
}

fn pipeline(seed: u64) -> PipelineBytes {
    let synth_cfg = SynthConfig {
        seed,
        mode: SynthMode::Geometric,
        num_images: 30,
        candidates_per_image: 60,
        noise_sigma: 0.05,
        ..SynthConfig::default()
    };
    let (ds, _) = generate(&synth_cfg).unwrap();
    let synth = ds.to_jsonl_bytes();
    let ds = Dataset::read_jsonl(synth.as_slice()).unwrap();
    let labeled_ds = label_dataset(&ds);
    let labeled = labeled_ds.to_jsonl_bytes();
    let ds = Dataset::read_jsonl(labeled.as_slice()).unwrap();
    let model = train_soft_margin(&ds, &TrainingConfig { k: 10, ..TrainingConfig::default() }).unwrap();
    let model_json = model.to_json().unwrap();
    let model = TrainedModel::from_json(&model_json).unwrap();
    let reranked_ds = rerank_dataset(&model, &ds).unwrap();
    let reranked = reranked_ds.to_jsonl_bytes();
    let reranked_ds = Dataset::read_jsonl(reranked.as_slice()).unwrap();
    let config = EvalConfig::default();
    let pair = ReportPair {
        reports: [
            EvalReport::evaluate(&ds, &identity_rankings(&ds), &config, "ingestion").unwrap(),
            EvalReport::evaluate(&reranked_ds, &identity_rankings(&reranked_ds), &config, "reranked").unwrap(),
        ],
    };
    PipelineBytes {
        synth,
        labeled,
        model: strip_timestamp(&model_json),
        reranked,
        report: pair.to_json().unwrap(),
    }
}

fn determinism() -> Outcome {
    let a = pipeline(808);
    let b = pipeline(808);
    let same = [
        ("synthetic dataset", a.synth == b.synth),
        ("labeled dataset", a.labeled == b.labeled),
        ("model", a.model == b.model),
        ("reranked dataset", a.reranked == b.reranked),
        ("report", a.report == b.report),
    ];
    if let Some((what, _)) = same.iter().find(|(_, eq)| !eq) {
        return outcome(false, format!("{what} differs between runs"));
    }
    // every weight survives the text round trip exactly
    let v: serde_json::Value = serde_json::from_str(&a.model).unwrap();
    let weights = v["weights"].as_array().unwrap();
    for w in weights {
        let text = w.to_string();
        let parsed: f64 = text.parse().unwrap();
        if parsed != w.as_f64().unwrap() {
            return outcome(false, format!("weight {text} does not round-trip"));
        }
    }
    let digits = weights
        .iter()
        .map(|w| w.to_string().trim_start_matches('-').chars().filter(char::is_ascii_digit).count())
        .min()
        .unwrap_or(0);
    outcome(
        true,
        format!(
            "two runs byte-identical across 5 artifacts; {} weights round-trip exactly (shortest repr, min {digits} digits)",
            weights.len()
        ),
    )
}

// ---------------------------------------------------------------- criterion 9

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

fn report_structure() -> Outcome {
    let train = geometric(1, 40);
    let test = geometric(2, 20);
    let model = train_soft_margin(&train, &TrainingConfig { k: 10, ..TrainingConfig::default() }).unwrap();
    let reranked = rerank_dataset(&model, &test).unwrap();
    let config = EvalConfig::default();
    let pair = ReportPair {
        reports: [
            EvalReport::evaluate(&test, &identity_rankings(&test), &config, "SS").unwrap(),
            EvalReport::evaluate(&reranked, &identity_rankings(&reranked), &config, "SS+PRanking").unwrap(),
        ],
    };
    let text = render_text(&pair);
    let csv = render_csv(&pair);

    if std::env::var_os("PRERANK_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(golden_dir().join("report.txt"), &text).unwrap();
        std::fs::write(golden_dir().join("report.csv"), &csv).unwrap();
    }
    let golden_text = std::fs::read_to_string(golden_dir().join("report.txt")).unwrap_or_default();
    let golden_csv = std::fs::read_to_string(golden_dir().join("report.csv")).unwrap_or_default();
    if text != golden_text || csv != golden_csv {
        return outcome(false, "rendered report differs from the golden files");
    }

    // layout: three DR tables then MABO, each with a header and two rows
    let blocks: Vec<Vec<&str>> = text
        .split("\n\n")
        .map(|b| b.lines().collect::<Vec<_>>())
        .filter(|b| !b.is_empty())
        .collect();
    let titles = [
        "Detection rate (%) w.r.t. the number of proposals, IoU threshold 0.5",
        "Detection rate (%) w.r.t. the number of proposals, IoU threshold 0.7",
        "Detection rate (%) w.r.t. the number of proposals, IoU threshold 0.9",
        "Mean average best overlap (MABO) w.r.t. the number of proposals",
    ];
    if blocks.len() != 4 {
        return outcome(false, format!("expected 4 tables, found {}", blocks.len()));
    }
    for (i, (block, title)) in blocks.iter().zip(titles).enumerate() {
        if block.len() != 4 || block[0] != title {
            return outcome(false, format!("table {i} has the wrong title or row count"));
        }
        let header: Vec<&str> = block[1].split_whitespace().collect();
        if header != ["Algorithms", "1", "10", "50", "100", "200", "500", "800", "1000"] {
            return outcome(false, format!("table {i} header {header:?}"));
        }
        let decimals = if i < 3 { 2 } else { 4 };
        for row in &block[2..] {
            let cells: Vec<&str> = row.split_whitespace().collect();
            if cells.len() != 9 {
                return outcome(false, format!("table {i} row `{row}`"));
            }
            let well_formed = cells[1..].iter().all(|c| {
                c.split_once('.').is_some_and(|(int, frac)| {
                    !int.is_empty() && int.chars().all(|ch| ch.is_ascii_digit()) && frac.len() == decimals
                })
            });
            if !well_formed {
                return outcome(false, format!("table {i} row `{row}` is not {decimals}-decimal"));
            }
        }
    }
    outcome(true, "3 DR tables (delta 0.5/0.7/0.9) + MABO table, budgets 1..1000, 2/4 decimals, golden text and CSV match")
}
