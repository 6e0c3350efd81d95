use har_core::dataset::{split_holdout, Normalization, SequenceWindow};
use har_core::lstm::{
    evaluate, load_model, model_to_json, save_model, train, EvalReport, LstmConfig, LstmModel, LstmParams,
};
use har_core::sensor::{HandSide, MotionType};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(f: usize) -> Vec<String> {
    (0..f).map(|i| format!("f{i}")).collect()
}

fn random_model(f: usize, t: usize, seed: u64) -> LstmModel {
    let config = LstmConfig { input_features: f, window: t, hidden: 6, layers: 2, seed, ..LstmConfig::default() };
    let params = LstmParams::init(&config, &mut ChaCha8Rng::seed_from_u64(seed));
    LstmModel::new(config, params, Normalization::identity(f), names(f)).unwrap()
}

fn random_window(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}

/// Windows whose class is encoded as a noisy constant level per feature.
fn toy_windows(classes: usize, per_class: usize, f: usize, t: usize, seed: u64) -> Vec<SequenceWindow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..classes {
        for i in 0..per_class {
            let values = (0..t * f)
                .map(|j| {
                    let level = if j % f == k % f { 1.0 } else { -0.5 } * (1.0 + k as f64 / f as f64);
                    level + rng.random_range(-0.2..0.2)
                })
                .collect();
            out.push(SequenceWindow {
                respondent: format!("R{i}"),
                motion: MotionType::ALL[k],
                side: HandSide::Left,
                offset: 0,
                steps: t,
                features: f,
                values,
            });
        }
    }
    out
}

#[test]
fn uniform_model_predicts_first_class() {
    let config = LstmConfig { input_features: 3, window: 4, hidden: 5, ..LstmConfig::default() };
    let model = LstmModel::new(config.clone(), LstmParams::zeros(&config), Normalization::identity(3), names(3)).unwrap();
    let p = model.predict(&[0.7; 12], &names(3)).unwrap();
    assert_eq!(p.class, 0);
    assert_eq!(p.motion, Some(MotionType::OverheadPress));
    assert!((p.probability - 1.0 / 9.0).abs() < 1e-15);
}

#[test]
fn permuting_output_head_permutes_probabilities() {
    let model = random_model(3, 5, 11);
    let perm = [4usize, 2, 7, 0, 8, 1, 3, 6, 5];
    let mut permuted = model.clone();
    for (i, &src) in perm.iter().enumerate() {
        permuted.params.out_w.row_mut(i).copy_from_slice(model.params.out_w.row(src));
        permuted.params.out_b[i] = model.params.out_b[src];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let w = random_window(&mut rng, 15);
        let p = model.probabilities(&w).unwrap();
        let q = permuted.probabilities(&w).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert!((q[i] - p[src]).abs() < 1e-15);
        }
    }
}

#[test]
fn save_load_preserves_predictions() {
    let model = random_model(4, 7, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded, model);
    assert_eq!(model_to_json(&loaded), model_to_json(&model));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let w = random_window(&mut rng, 28);
        assert_eq!(model.predict(&w, &model.features).unwrap(), loaded.predict(&w, &model.features).unwrap());
    }
}

#[test]
fn separable_two_class_problem_is_learned() {
    let windows = toy_windows(2, 30, 2, 5, 1);
    let split = split_holdout(windows, names(2), 0.8, 2).unwrap();
    let config = LstmConfig {
        input_features: 2,
        window: 5,
        hidden: 8,
        layers: 1,
        classes: 2,
        epochs: 50,
        batch_size: 8,
        learning_rate: 1e-2,
        seed: 3,
        ..LstmConfig::default()
    };
    let (_, history) = train(&split, &config).unwrap();
    let best = history.epochs.iter().map(|e| e.train_accuracy).fold(0.0, f64::max);
    assert_eq!(best, 1.0, "{}", history.to_csv());
}

fn nine_class_config(seed: u64) -> LstmConfig {
    LstmConfig {
        input_features: 3,
        window: 6,
        hidden: 12,
        layers: 2,
        epochs: 3,
        batch_size: 8,
        learning_rate: 1e-2,
        seed,
        ..LstmConfig::default()
    }
}

#[test]
fn first_epoch_loss_is_below_chance() {
    let split = split_holdout(toy_windows(9, 20, 3, 6, 4), names(3), 0.8, 4).unwrap();
    let (_, history) = train(&split, &nine_class_config(9)).unwrap();
    let first = history.epochs[0].train_loss;
    assert!(first < 9f64.ln(), "epoch-1 loss {first}");
}

#[test]
fn same_seed_gives_bit_identical_training() {
    let split = split_holdout(toy_windows(9, 10, 3, 6, 6), names(3), 0.8, 6).unwrap();
    let (a, ha) = train(&split, &nine_class_config(21)).unwrap();
    let (b, hb) = train(&split, &nine_class_config(21)).unwrap();
    assert_eq!(ha, hb);
    assert_eq!(ha.to_csv(), hb.to_csv());
    assert_eq!(model_to_json(&a), model_to_json(&b));
    let (c, _) = train(&split, &nine_class_config(22)).unwrap();
    assert_ne!(model_to_json(&a), model_to_json(&c));
}

#[test]
fn constant_predictor_scores_one_ninth() {
    let config = LstmConfig { input_features: 3, window: 6, hidden: 4, ..LstmConfig::default() };
    let mut params = LstmParams::zeros(&config);
    params.out_b[0] = 10.0;
    let model = LstmModel::new(config, params, Normalization::identity(3), names(3)).unwrap();
    let windows = toy_windows(9, 7, 3, 6, 2);
    let report = evaluate(&model, &windows).unwrap();
    assert!((report.accuracy - 1.0 / 9.0).abs() < 1e-15);
    for (k, row) in report.confusion.iter().enumerate() {
        assert_eq!(row.iter().sum::<usize>(), report.per_class[k].support);
        assert_eq!(row[0], 7);
    }
    assert_eq!(report.per_class[0].recall, 1.0);
    assert_eq!(report.per_class[1].precision, 0.0);
}

#[test]
fn confusion_rows_sum_to_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(usize, usize)> = (0..500).map(|_| (rng.random_range(0..9), rng.random_range(0..9))).collect();
    let report = EvalReport::from_predictions(9, pairs.iter().copied());
    for k in 0..9 {
        let support = pairs.iter().filter(|(t, _)| *t == k).count();
        assert_eq!(report.confusion[k].iter().sum::<usize>(), support);
        assert_eq!(report.per_class[k].support, support);
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    assert_eq!(report.correct, correct);
    assert_eq!(report.total, 500);
}
