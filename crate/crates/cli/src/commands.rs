use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use prerank::dataset::label_dataset;
use prerank::features::{featurize_dataset, HogConfig, PgmDirectory};
use prerank::metrics::{identity_rankings, render_csv, render_text, Coverage, ReportPair};
use prerank::ranking::{rerank_dataset, train, Formulation, MarginMode, SlackMode};
use prerank::synth::{generate, SynthConfig, SynthMode};
use prerank::{Dataset, ErrorKind, EvalConfig, EvalReport, ImageRecord, TrainedModel, TrainingConfig};

use crate::args::*;
use crate::manifest::{manifest_path, RunRecorder};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }

    fn data(message: impl Into<String>) -> Self {
        CliError { code: EXIT_DATA, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<prerank::Error> for CliError {
    fn from(e: prerank::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Usage => EXIT_USAGE,
            ErrorKind::Data => EXIT_DATA,
            ErrorKind::Numeric => EXIT_NUMERIC,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn read_bytes(path: &Path, rec: &mut RunRecorder) -> CliResult<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    rec.input(path, &bytes);
    Ok(bytes)
}

fn read_dataset(path: &Path, rec: &mut RunRecorder) -> CliResult<Dataset> {
    let bytes = read_bytes(path, rec)?;
    Dataset::read_jsonl(bytes.as_slice()).map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

/// Writes every output, then the manifest next to `manifest_for`. Called only
/// after all inputs have been read and all results computed.
fn commit(outputs: Vec<(PathBuf, Vec<u8>)>, manifest_for: &Path, rec: RunRecorder) -> CliResult {
    for (path, bytes) in &outputs {
        std::fs::write(path, bytes).map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))?;
    }
    let paths: Vec<PathBuf> = outputs.into_iter().map(|(p, _)| p).collect();
    let manifest = rec.finish(&paths);
    let target = manifest_path(manifest_for);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    std::fs::write(&target, json).map_err(|e| CliError::data(format!("writing {}: {e}", target.display())))?;
    for p in &paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

pub fn label(args: &LabelArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let dataset = read_dataset(&args.input, &mut rec)?;
    let labeled = label_dataset(&dataset);
    eprintln!(
        "labeled {} images: {} groundtruth objects, {} candidates",
        labeled.len(),
        labeled.num_groundtruth(),
        labeled.num_candidates()
    );
    commit(vec![(args.out.clone(), labeled.to_jsonl_bytes())], &args.out, rec)
}

pub fn featurize(args: &FeaturizeArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let dataset = read_dataset(&args.input, &mut rec)?;
    let config = HogConfig {
        resize_w: args.resize_w,
        resize_h: args.resize_h,
        cell_size: args.cell_size,
        orientation_bins: args.orientation_bins,
        clip_value: args.clip_value,
        ..HogConfig::default()
    };
    config.validate()?;
    rec.config(&config);
    let source = PgmDirectory::new(&args.images);
    let outcome = featurize_dataset(&dataset, &source, &config, args.keep_existing)?;
    if !outcome.failures.is_empty() {
        let lines: Vec<String> = outcome
            .failures
            .iter()
            .map(|f| format!("  {}: {}", f.image_id, f.reason))
            .collect();
        return Err(CliError::data(format!(
            "{} of {} images could not be featurized:\n{}",
            lines.len(),
            dataset.len(),
            lines.join("\n")
        )));
    }
    eprintln!(
        "featurized {} candidates, descriptor length {}",
        outcome.dataset.num_candidates(),
        config.descriptor_len()
    );
    commit(vec![(args.out.clone(), outcome.dataset.to_jsonl_bytes())], &args.out, rec)
}

pub fn train_cmd(args: &TrainArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let config = TrainingConfig {
        k: args.k,
        c: args.c,
        epochs: args.epochs,
        step_size: args.step_size,
        decay: args.decay,
        seed: args.seed,
        mode: match args.mode {
            MarginArg::Soft => MarginMode::Soft,
            MarginArg::Hard => MarginMode::Hard,
        },
        hard_mode_c: args.hard_c,
        slack: match args.slack {
            SlackArg::Shared => SlackMode::Shared,
            SlackArg::PerConstraint => SlackMode::PerConstraint,
        },
        ..TrainingConfig::default()
    };
    config.validate()?;
    let formulation = match args.baseline {
        BaselineArg::Partial => Formulation::Partial,
        BaselineArg::Full => Formulation::Full,
    };
    rec.config(&(&config, formulation));
    let dataset = read_dataset(&args.input, &mut rec)?;
    eprintln!(
        "training {:?} model on {} images, {} candidates",
        formulation,
        dataset.len(),
        dataset.num_candidates()
    );
    let outcome = train(&dataset, &config, formulation)?;
    let last = outcome.history.len();
    for stat in &outcome.history {
        if stat.epoch == last || (args.log_every > 0 && stat.epoch % args.log_every == 0) {
            eprintln!(
                "epoch {:>5}  objective {:.9e}  best {:.9e}  step {:.3e}",
                stat.epoch, stat.objective, stat.best_objective, stat.step_size
            );
        }
    }
    eprintln!(
        "final objective {:.9e} after {} epochs{}",
        outcome.model.final_objective,
        last,
        if outcome.converged { " (converged)" } else { "" }
    );
    if let Some(report) = &outcome.model.feasibility {
        eprintln!(
            "feasibility: {} constraints, {} margin violations, {} order violations, max hinge {:.3e}",
            report.constraints, report.margin_violations, report.order_violations, report.max_hinge
        );
    }
    let json = outcome.model.to_json()?;
    commit(vec![(args.out.clone(), json.into_bytes())], &args.out, rec)
}

pub fn rerank(args: &RerankArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let model_bytes = read_bytes(&args.model, &mut rec)?;
    let text = String::from_utf8(model_bytes)
        .map_err(|_| CliError::data(format!("{}: not UTF-8", args.model.display())))?;
    let model = TrainedModel::from_json(&text)?;
    let dataset = read_dataset(&args.input, &mut rec)?;
    let reranked = rerank_dataset(&model, &dataset)?;
    eprintln!("reranked {} images", reranked.len());
    commit(vec![(args.out.clone(), reranked.to_jsonl_bytes())], &args.out, rec)
}

/// Lines up the reranked records with the original ones, checking that they
/// describe the same images and, when present, that `original_index` is a
/// permutation pointing at identical boxes.
fn align(original: &Dataset, reranked: &Dataset) -> CliResult<Dataset> {
    let by_id: HashMap<&str, &ImageRecord> =
        reranked.records().iter().map(|r| (r.image_id.as_str(), r)).collect();
    let orig_ids: BTreeSet<&str> = original.records().iter().map(|r| r.image_id.as_str()).collect();
    let missing: Vec<&str> = orig_ids.iter().copied().filter(|id| !by_id.contains_key(id)).collect();
    let extra: Vec<&str> = reranked
        .records()
        .iter()
        .map(|r| r.image_id.as_str())
        .filter(|id| !orig_ids.contains(id))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("image ids differ between datasets");
        if !missing.is_empty() {
            msg.push_str(&format!("\n  missing from reranked: {}", missing.join(", ")));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("\n  missing from original: {}", extra.join(", ")));
        }
        return Err(CliError::data(msg));
    }

    let mut records = Vec::with_capacity(original.len());
    for orig in original.records() {
        let re = by_id[orig.image_id.as_str()];
        let bad = |why: &str| CliError::data(format!("image `{}`: {why}", orig.image_id));
        if re.candidates.len() != orig.candidates.len() {
            return Err(bad("candidate counts differ"));
        }
        if re.groundtruth != orig.groundtruth {
            return Err(bad("groundtruth differs"));
        }
        let indices: Vec<Option<usize>> = re.candidates.iter().map(|c| c.original_index).collect();
        if indices.iter().all(Option::is_some) {
            let mut seen = vec![false; orig.candidates.len()];
            for (c, idx) in re.candidates.iter().zip(&indices) {
                let i = idx.expect("checked above");
                if i >= seen.len() || seen[i] {
                    return Err(bad("original_index is not a permutation"));
                }
                seen[i] = true;
                if orig.candidates[i].bbox != c.bbox {
                    return Err(bad(&format!("candidate with original_index {i} has a different box")));
                }
            }
        } else if indices.iter().any(Option::is_some) {
            return Err(bad("original_index present on some candidates only"));
        }
        records.push(re.clone());
    }
    Ok(Dataset::new(records)?)
}

pub fn eval(args: &EvalArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let config = EvalConfig {
        iou_thresholds: args.deltas.clone(),
        proposal_budgets: args.budgets.clone(),
        coverage: match args.coverage {
            CoverageArg::Strict => Coverage::Strict,
            CoverageArg::Inclusive => Coverage::Inclusive,
        },
    };
    config.validate()?;
    if args.original_name == args.reranked_name {
        return Err(CliError::usage("the two source names must differ"));
    }
    rec.config(&config);
    let original = read_dataset(&args.original, &mut rec)?;
    let reranked = read_dataset(&args.reranked, &mut rec)?;
    let aligned = align(&original, &reranked)?;
    let pair = ReportPair {
        reports: [
            EvalReport::evaluate(&original, &identity_rankings(&original), &config, &args.original_name)?,
            EvalReport::evaluate(&aligned, &identity_rankings(&aligned), &config, &args.reranked_name)?,
        ],
    };
    let text = render_text(&pair);
    print!("{text}");
    let with_ext = |ext: &str| {
        let mut s = args.out.as_os_str().to_owned();
        s.push(ext);
        PathBuf::from(s)
    };
    commit(
        vec![
            (with_ext(".csv"), render_csv(&pair).into_bytes()),
            (with_ext(".txt"), text.into_bytes()),
            (with_ext(".json"), pair.to_json()?.into_bytes()),
        ],
        &args.out,
        rec,
    )
}

pub fn synth(args: &SynthArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let config = SynthConfig {
        seed: args.seed,
        mode: match args.mode {
            SynthModeArg::FeatureOnly => SynthMode::FeatureOnly,
            SynthModeArg::Geometric => SynthMode::Geometric,
        },
        num_images: args.num_images,
        candidates_per_image: args.candidates,
        feature_dim: args.feature_dim,
        planted_weight: args.planted_weight.clone(),
        noise_sigma: args.noise,
        image_width: args.image_width,
        image_height: args.image_height,
        objects_per_image: (args.min_objects, args.max_objects),
        classes: args.classes,
        copies_per_object: args.copies,
        jitter: args.jitter,
    };
    if args.planted_weight.is_some() && config.mode == SynthMode::Geometric {
        return Err(CliError::usage("--planted-weight applies to feature-only mode"));
    }
    rec.config(&config);
    let (dataset, meta) = generate(&config)?;
    eprintln!(
        "generated {} images, {} candidates, {} groundtruth objects",
        dataset.len(),
        dataset.num_candidates(),
        dataset.num_groundtruth()
    );
    let meta_path = args.out.with_extension("meta.json");
    commit(
        vec![
            (args.out.clone(), dataset.to_jsonl_bytes()),
            (meta_path, meta.to_json()?.into_bytes()),
        ],
        &args.out,
        rec,
    )
}

pub fn report(args: &ReportArgs) -> CliResult {
    let mut rec = RunRecorder::new();
    let bytes = read_bytes(&args.input, &mut rec)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::data(format!("{}: not UTF-8", args.input.display())))?;
    let pair = ReportPair::from_json(&text)?;
    let rendered = match args.format {
        FormatArg::Text => render_text(&pair),
        FormatArg::Csv => render_csv(&pair),
    };
    match &args.out {
        Some(out) => commit(vec![(out.clone(), rendered.into_bytes())], out, rec),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}
