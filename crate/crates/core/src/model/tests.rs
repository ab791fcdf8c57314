use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn lv(features: Vec<f64>, is_vm: bool) -> LabeledVector {
    LabeledVector { features, is_vm }
}

/// Ten points on one feature, separable at 0.5.
fn separable_1d() -> Vec<LabeledVector> {
    let mut data = Vec::new();
    for i in 0..5 {
        data.push(lv(vec![0.55 + 0.08 * i as f64], true));
        data.push(lv(vec![0.05 + 0.08 * i as f64], false));
    }
    data
}

fn random_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<LabeledVector> {
    loop {
        let data: Vec<LabeledVector> = (0..n)
            .map(|_| {
                let features: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                let score = features[0] + 0.4 * features[d.min(2) - 1] + rng.gen_range(-0.3..0.3);
                lv(features, score > 0.7)
            })
            .collect();
        let vm = data.iter().filter(|r| r.is_vm).count();
        if vm > 0 && vm < n {
            return data;
        }
    }
}

fn tau(t: f64) -> DecisionThreshold {
    DecisionThreshold::new(t).unwrap()
}

// --- classify / threshold ---

#[test]
fn classify_boundary_is_greater_or_equal() {
    assert_eq!(classify(0.50, tau(0.50)), Decision::Vm);
    assert_eq!(classify(0.49, tau(0.50)), Decision::Nvm);
    assert_eq!(classify(0.70, tau(0.95)), Decision::Nvm);
}

#[test]
fn threshold_range_is_enforced() {
    assert!(DecisionThreshold::new(0.29).is_err());
    assert!(DecisionThreshold::new(0.96).is_err());
    assert_eq!(DecisionThreshold::new(0.30).unwrap().tau(), 0.30);
    assert_eq!(DecisionThreshold::new(0.95).unwrap().tau(), 0.95);
    assert_eq!(DecisionThreshold::default().tau(), 0.5);
}

#[test]
fn decision_is_monotone_in_tau() {
    // once the decision flips to NVM it stays NVM as tau rises
    for p in [0.0, 0.31, 0.5, 0.62, 0.94, 1.0] {
        let mut was_nvm = false;
        for i in (30..=95).step_by(5) {
            let d = classify(p, tau(i as f64 / 100.0));
            if was_nvm {
                assert_eq!(d, Decision::Nvm, "p={p}, tau={i}");
            }
            was_nvm = d == Decision::Nvm;
        }
    }
}

// --- boosted ---

#[test]
fn empty_ensemble_predicts_the_prior() {
    let data = vec![
        lv(vec![0.1, 0.2], true),
        lv(vec![0.3, 0.4], false),
        lv(vec![0.5, 0.6], false),
        lv(vec![0.7, 0.8], false),
    ];
    let params = BoostedParams {
        n_trees: 0,
        ..BoostedParams::default()
    };
    let m = train_boosted(&data, &params).unwrap();
    let expected_base = (0.25f64 / 0.75).ln();
    assert!((m.base_score - expected_base).abs() < 1e-12);
    for x in [[0.0, 0.0], [0.9, 0.1], [0.5, 0.5]] {
        let p = m.predict_proba(&x);
        assert!((p - sigmoid(expected_base)).abs() < 1e-12);
    }
    assert_eq!(m.stage_losses.len(), 1);
}

#[test]
fn boosted_separates_the_toy_set_at_depth_one() {
    let data = separable_1d();
    let params = BoostedParams {
        max_depth: 1,
        ..BoostedParams::default()
    };
    let m = train_boosted(&data, &params).unwrap();
    for row in &data {
        let p = m.predict_proba(&row.features);
        assert!(0.0 < p && p < 1.0, "probability must stay inside (0,1)");
        assert_eq!(
            classify(p, tau(0.5)),
            if row.is_vm { Decision::Vm } else { Decision::Nvm },
            "misclassified {:?}",
            row.features
        );
    }
}

#[test]
fn boosted_rejects_degenerate_training_sets() {
    assert!(train_boosted(&[], &BoostedParams::default()).is_err());
    let one = vec![lv(vec![0.1], true)];
    assert!(train_boosted(&one, &BoostedParams::default()).is_err());
    let single_class = vec![lv(vec![0.1], true), lv(vec![0.9], true)];
    assert!(train_boosted(&single_class, &BoostedParams::default()).is_err());
    let ragged = vec![lv(vec![0.1], true), lv(vec![0.2, 0.3], false)];
    assert!(train_boosted(&ragged, &BoostedParams::default()).is_err());
}

#[test]
fn boosted_stage_losses_never_increase() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..20 {
        let data = random_dataset(&mut rng, 60, 4);
        let m = train_boosted(&data, &BoostedParams::default()).unwrap();
        assert_eq!(m.stage_losses.len(), 51);
        for pair in m.stage_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "round {round}: stage loss rose from {} to {}",
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn boosted_trees_respect_the_depth_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = random_dataset(&mut rng, 200, 15);
    let m = train_boosted(&data, &BoostedParams::default()).unwrap();
    assert_eq!(m.trees.len(), 50);
    for t in &m.trees {
        assert!(t.depth() <= 2);
        assert!(t.internal_split_count() <= 3);
        if let Some(max_f) = t.max_feature_index() {
            assert!(max_f < 15);
        }
    }
}

#[test]
fn boosted_training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let data = random_dataset(&mut rng, 80, 6);
    let a = train_boosted(&data, &BoostedParams::default()).unwrap();
    let b = train_boosted(&data, &BoostedParams::default()).unwrap();
    assert_eq!(a, b);
}

// --- bagged ---

#[test]
fn single_point_training_predicts_its_class_with_certainty() {
    let params = BaggedParams {
        n_trees: 1,
        seed: 3,
    };
    let m = train_bagged(&[lv(vec![0.4, 0.6], true)], &params).unwrap();
    assert_eq!(m.predict_proba(&[0.4, 0.6]), 1.0);
    let m = train_bagged(&[lv(vec![0.4, 0.6], false)], &params).unwrap();
    assert_eq!(m.predict_proba(&[0.4, 0.6]), 0.0);
}

#[test]
fn duplicated_rows_grow_pure_leaves() {
    let mut data = Vec::new();
    for _ in 0..10 {
        data.push(lv(vec![0.2, 0.9], true));
        data.push(lv(vec![0.8, 0.1], false));
    }
    let m = train_bagged(&data, &BaggedParams::default()).unwrap();
    assert_eq!(m.predict_proba(&[0.2, 0.9]), 1.0);
    assert_eq!(m.predict_proba(&[0.8, 0.1]), 0.0);
}

#[test]
fn bagged_probability_is_an_exact_vote_fraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = random_dataset(&mut rng, 120, 5);
    let m = train_bagged(&data, &BaggedParams::default()).unwrap();
    assert_eq!(m.trees.len(), 50);
    for _ in 0..50 {
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..1.0)).collect();
        let p = m.predict_proba(&x);
        let votes = p * 50.0;
        assert!(
            (votes - votes.round()).abs() < 1e-9,
            "p*n_trees = {votes} is not an integer"
        );
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn bagged_is_deterministic_per_seed_and_varies_across_seeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let data = random_dataset(&mut rng, 100, 4);
    let a = train_bagged(&data, &BaggedParams { n_trees: 50, seed: 1 }).unwrap();
    let b = train_bagged(&data, &BaggedParams { n_trees: 50, seed: 1 }).unwrap();
    let c = train_bagged(&data, &BaggedParams { n_trees: 50, seed: 2 }).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c, "different seeds should draw different bootstraps");
}

// --- linear ---

#[test]
fn constant_features_reduce_to_the_prior() {
    let mut data = Vec::new();
    for i in 0..10 {
        data.push(lv(vec![3.0, 7.0], i < 3)); // 30% VM
    }
    let m = train_linear(&data, &LinearParams::default()).unwrap();
    for w in &m.weights {
        assert!(w.abs() < 1e-6, "weights should vanish, got {w}");
    }
    let prior_logodds = (0.3f64 / 0.7).ln();
    assert!((m.bias - prior_logodds).abs() < 1e-6);
}

#[test]
fn linear_separates_the_toy_set() {
    let data = separable_1d();
    let m = train_linear(&data, &LinearParams::default()).unwrap();
    assert!(m.converged);
    for row in &data {
        let p = m.predict_proba(&row.features);
        assert!(0.0 < p && p < 1.0);
        assert_eq!(
            classify(p, tau(0.5)),
            if row.is_vm { Decision::Vm } else { Decision::Nvm }
        );
    }
}

#[test]
fn weaker_regularization_never_fits_worse() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let data = random_dataset(&mut rng, 150, 6);
    let data_loss = |m: &LinearModel| {
        data.iter()
            .map(|r| {
                let p = m.predict_proba(&r.features);
                let y = if r.is_vm { 1.0 } else { 0.0 };
                -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
            })
            .sum::<f64>()
    };
    let mut c = 1.0;
    let mut prev = data_loss(&train_linear(&data, &LinearParams { inverse_regularization: c }).unwrap());
    for _ in 0..4 {
        c *= 2.0;
        let next = data_loss(&train_linear(&data, &LinearParams { inverse_regularization: c }).unwrap());
        assert!(next <= prev + 1e-9, "loss rose from {prev} to {next} at C={c}");
        prev = next;
    }
}

#[test]
fn shifting_a_feature_column_is_absorbed_by_standardization() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let data = random_dataset(&mut rng, 100, 3);
    let shifted: Vec<LabeledVector> = data
        .iter()
        .map(|r| {
            let mut f = r.features.clone();
            f[1] += 5.0;
            lv(f, r.is_vm)
        })
        .collect();
    let base = train_linear(&data, &LinearParams::default()).unwrap();
    let moved = train_linear(&shifted, &LinearParams::default()).unwrap();
    for r in &data {
        let mut f = r.features.clone();
        f[1] += 5.0;
        let a = base.predict_proba(&r.features);
        let b = moved.predict_proba(&f);
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn zero_variance_column_mixed_with_signal_still_trains() {
    let mut data = separable_1d();
    for row in &mut data {
        row.features.push(42.0); // constant column
    }
    let m = train_linear(&data, &LinearParams::default()).unwrap();
    assert!(m.converged);
    assert!(m.weights[1].abs() < 1e-6);
    assert_eq!(m.standardization.stds[1], 1.0);
}

// --- predict_proba dispatch ---

#[test]
fn dimension_mismatch_is_an_input_error() {
    let data = separable_1d();
    let models = [
        Model::Boosted(train_boosted(&data, &BoostedParams::default()).unwrap()),
        Model::Bagged(train_bagged(&data, &BaggedParams::default()).unwrap()),
        Model::Linear(train_linear(&data, &LinearParams::default()).unwrap()),
    ];
    for m in &models {
        assert_eq!(m.n_features(), 1);
        assert!(predict_proba(m, &[0.5]).is_ok());
        let err = predict_proba(m, &[0.5, 0.5]).unwrap_err();
        assert!(matches!(err, CoreError::Input(_)), "{}", m.family_name());
        assert!(m.op_count() > 0);
    }
}

// --- persistence ---

fn trained_models() -> Vec<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let data = random_dataset(&mut rng, 100, 15);
    vec![
        Model::Boosted(train_boosted(&data, &BoostedParams::default()).unwrap()),
        Model::Bagged(train_bagged(&data, &BaggedParams { n_trees: 50, seed: 9 }).unwrap()),
        Model::Linear(train_linear(&data, &LinearParams::default()).unwrap()),
    ]
}

fn names15() -> Vec<String> {
    crate::features::FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[test]
fn round_trip_predictions_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for model in trained_models() {
        let path = dir.path().join(format!("{}.json", model.family_name()));
        let saved = SavedModel::new(
            model.clone(),
            names15(),
            5000,
            ModelMetadata {
                seed: Some(9),
                ..ModelMetadata::default()
            },
        )
        .unwrap();
        save_model(&saved, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.version, MODEL_VERSION);
        assert_eq!(loaded.window_ms, 5000);
        assert_eq!(loaded.feature_names, names15());
        for _ in 0..100 {
            let x: Vec<f64> = (0..15).map(|_| rng.gen_range(0.0..1.0)).collect();
            let before = predict_proba(&model, &x).unwrap();
            let after = predict_proba(&loaded.model, &x).unwrap();
            assert_eq!(
                before.to_bits(),
                after.to_bits(),
                "{} drifted through serialization",
                model.family_name()
            );
        }
    }
}

#[test]
fn corrupt_and_mismatched_files_error_loudly() {
    let dir = tempfile::tempdir().unwrap();

    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, b"{\"format\": \"vmd-model\"").unwrap();
    assert!(load_model(&garbled).is_err());

    let wrong_tag = dir.path().join("tag.json");
    std::fs::write(
        &wrong_tag,
        b"{\"format\": \"something-else\", \"version\": 1}",
    )
    .unwrap();
    let err = load_model(&wrong_tag).unwrap_err();
    assert!(err.to_string().contains("something-else"));

    assert!(load_model(&dir.path().join("absent.json")).is_err());
}

#[test]
fn newer_version_is_an_explicit_version_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v2.json");
    let model = trained_models().remove(2);
    let mut saved =
        SavedModel::new(model, names15(), 5000, ModelMetadata::default()).unwrap();
    saved.version = 2;
    let json = serde_json::to_string(&saved).unwrap();
    std::fs::write(&path, json).unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(err.to_string().contains("version 2"), "{err}");
}

#[test]
fn feature_name_count_must_match_model() {
    let model = trained_models().remove(0);
    assert!(SavedModel::new(model, vec!["a".into()], 5000, ModelMetadata::default()).is_err());
}
