use prerank::ranking::{build_partial_constraints, score, train_soft_margin, TrainedModel, TrainingConfig};
use prerank::synth::{generate_feature_dataset, StreamRng, SynthConfig};
use prerank::{Dataset, WeightVector};

/// Fraction of (positive, negative) pairs whose scores are out of order.
fn violation_rate(model: &TrainedModel, ds: &Dataset, cfg: &TrainingConfig) -> f64 {
    let mut bad = 0usize;
    let mut total = 0usize;
    for r in ds.records() {
        let s = score(model, r).unwrap();
        let part = build_partial_constraints(r, cfg).unwrap();
        for &p in &part.positives {
            for &q in &part.negatives {
                bad += usize::from(s[p] <= s[q]);
                total += 1;
            }
        }
    }
    bad as f64 / total as f64
}

#[test]
fn trained_model_beats_random_directions_on_held_out_images() {
    let synth = SynthConfig {
        seed: 17,
        num_images: 150,
        candidates_per_image: 50,
        feature_dim: 16,
        noise_sigma: 0.05,
        ..SynthConfig::default()
    };
    let (ds, _) = generate_feature_dataset(&synth).unwrap();
    let (train, test) = ds.split_at(100).unwrap();
    let cfg = TrainingConfig { k: 5, ..TrainingConfig::default() };
    let model = train_soft_margin(&train, &cfg).unwrap();
    let trained = violation_rate(&model, &test, &cfg);

    let mut rng = StreamRng::new(99, 0);
    let random: f64 = (0..10)
        .map(|_| {
            let w = WeightVector::new((0..16).map(|_| rng.normal()).collect()).unwrap();
            violation_rate(&TrainedModel::with_weights(w), &test, &cfg)
        })
        .sum::<f64>()
        / 10.0;
    assert!(trained < random, "trained {trained} vs random {random}");
    assert!(trained < 0.05, "trained {trained}");
}

#[test]
fn feature_only_defaults_lower_the_objective_below_c_n() {
    let synth = SynthConfig { num_images: 200, candidates_per_image: 50, ..SynthConfig::default() };
    let (ds, _) = generate_feature_dataset(&synth).unwrap();
    let cfg = TrainingConfig { k: 5, ..TrainingConfig::default() };
    let model = train_soft_margin(&ds, &cfg).unwrap();
    assert!(model.final_objective < cfg.c * 200.0);
}
