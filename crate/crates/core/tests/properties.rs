use std::collections::BTreeSet;

use har_core::dataset::{
    holdout_partition, split_holdout, window_count, window_sessions, Normalization, SequenceWindow, SessionFrames,
};
use har_core::features::pearson;
use har_core::lstm::{LstmConfig, LstmModel, LstmParams};
use har_core::sensor::{
    euler_to_quaternion, frame_to_csv_row, hamilton_product, parse_csv_row, quaternion_inverse, HandSide,
    MotionType, SensorFrame, SensorGroup,
};
use har_core::sim::synth_session;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn two_pass(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..max).prop_flat_map(|n| (prop::collection::vec(-1e3..1e3f64, n), prop::collection::vec(-1e3..1e3f64, n)))
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, Just(0.0), Just(-0.0), Just(1e-300), Just(f64::MAX)]
}

fn frame() -> impl Strategy<Value = SensorFrame> {
    (
        "[A-Za-z0-9_-]{1,8}",
        0.0..2e9f64,
        prop::collection::vec(finite(), 29),
        0..MotionType::COUNT,
        any::<bool>(),
    )
        .prop_map(|(respondent, timestamp, values, motion, left)| {
            let base = synth_session("S01", MotionType::BicepCurls, HandSide::Left, 1).frames[0].clone();
            let mut f = SensorFrame {
                respondent,
                timestamp,
                motion_type: MotionType::ALL[motion],
                side: if left { HandSide::Left } else { HandSide::Right },
                ..base
            };
            for g in SensorGroup::ALL {
                let off = g.offset();
                let width = g.width();
                f.group_mut(g).copy_from_slice(&values[off..off + width]);
            }
            f.availability_mask = f.inferred_mask();
            f
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn csv_row_round_trip(f in frame()) {
        let row = frame_to_csv_row(&f);
        let back = parse_csv_row(&row).unwrap();
        prop_assert_eq!(&back, &f);
        prop_assert_eq!(frame_to_csv_row(&back), row);
    }

    #[test]
    fn quaternion_unit_and_inverse(roll in -3.2..3.2f64, pitch in -1.6..1.6f64, yaw in -3.2..3.2f64) {
        let q = euler_to_quaternion([roll, pitch, yaw]).unwrap();
        let norm: f64 = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-12);
        prop_assert!(q[3] >= 0.0);
        let id = hamilton_product(q, quaternion_inverse(q).unwrap());
        for (a, b) in id.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_non_unit_quaternion(q in prop::array::uniform4(-10.0..10.0f64)) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let left = hamilton_product(quaternion_inverse(q).unwrap(), q);
        for (a, b) in left.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pearson_matches_two_pass((x, y) in paired(200)) {
        let r = pearson(&x, &y).unwrap();
        prop_assert!((r - two_pass(&x, &y)).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn pearson_affine_invariance((x, y) in paired(100), a in 0.1..50.0f64, b in -100.0..100.0f64, flip in any::<bool>()) {
        let r = pearson(&x, &y).unwrap();
        let s = if flip { -a } else { a };
        let xt: Vec<f64> = x.iter().map(|v| s * v + b).collect();
        let r2 = pearson(&xt, &y).unwrap();
        let expected = if flip { -r } else { r };
        prop_assert!((r2 - expected).abs() < 1e-10);
        prop_assert!((pearson(&y, &x).unwrap() - r).abs() < 1e-15);
    }

    #[test]
    fn window_count_matches_brute_force(n in 0usize..=1000, length in 1usize..200, stride in 1usize..200) {
        let brute = (0..n).filter(|&start| start % stride == 0 && start + length <= n).count();
        prop_assert_eq!(window_count(n, length, stride), brute);
    }

    #[test]
    fn windows_never_cross_sessions(lens in prop::collection::vec(0usize..60, 1..5), length in 1usize..20, stride in 1usize..20) {
        let sessions: Vec<SessionFrames> = lens
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                let s = synth_session(&format!("S{i}"), MotionType::ALL[i], HandSide::Left, i as u64);
                SessionFrames { respondent: s.respondent, motion: s.motion_type, side: s.side, frames: s.frames[..n].to_vec() }
            })
            .collect();
        let windows = window_sessions(&sessions, &[0, 5], length, stride);
        let expected: usize = lens.iter().map(|&n| window_count(n, length, stride)).sum();
        prop_assert_eq!(windows.len(), expected);
        for w in &windows {
            let s = sessions.iter().find(|s| s.motion == w.motion).unwrap();
            prop_assert!(w.offset + length <= s.frames.len());
            prop_assert_eq!(w.step(0)[1], s.frames[w.offset].channel(5));
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint(counts in prop::collection::vec(1usize..30, 1..9), ratio in 0.05..0.95f64, seed in any::<u64>()) {
        let mut windows = Vec::new();
        for (k, &c) in counts.iter().enumerate() {
            for i in 0..c {
                windows.push(SequenceWindow {
                    respondent: format!("R{k}-{i}"),
                    motion: MotionType::ALL[k],
                    side: HandSide::Left,
                    offset: i,
                    steps: 1,
                    features: 1,
                    values: vec![(k * 100 + i) as f64],
                });
            }
        }
        let total = windows.len();
        let names = vec!["x".to_string()];
        let (train, test) = holdout_partition(windows, &names, ratio, seed).unwrap();
        prop_assert_eq!(train.len(), (ratio * total as f64).round() as usize);
        prop_assert_eq!(train.len() + test.len(), total);
        let ids: BTreeSet<(String, usize)> = train.iter().chain(&test).map(|w| (w.respondent.clone(), w.offset)).collect();
        prop_assert_eq!(ids.len(), total);
        for (k, &c) in counts.iter().enumerate() {
            let t = train.iter().filter(|w| w.motion.index() == k).count();
            prop_assert!((t as f64 - ratio * c as f64).abs() <= 1.0 + 1e-9, "class {} train {} of {}", k, t, c);
        }
    }

    #[test]
    fn normalized_train_moments(seed in any::<u64>(), scale in 0.01..1e3f64, shift in -1e4..1e4f64) {
        let s = synth_session("S01", MotionType::SeatedRows, HandSide::Right, seed);
        let sessions = [SessionFrames { respondent: s.respondent, motion: s.motion_type, side: s.side, frames: s.frames }];
        let mut windows = window_sessions(&sessions, &[0, 3, 14], 10, 5);
        for w in &mut windows {
            for v in &mut w.values {
                *v = *v * scale + shift;
            }
        }
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let split = split_holdout(windows, names, 0.8, seed).unwrap();
        let rows: Vec<&[f64]> = split.train.iter().flat_map(|w| (0..w.steps).map(move |t| w.step(t))).collect();
        let n = rows.len() as f64;
        for j in 0..3 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9, "mean {}", mean);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-6, "std {}", var.sqrt());
        }
    }

    #[test]
    fn probabilities_form_a_distribution(seed in any::<u64>(), values in prop::collection::vec(-20.0..20.0f64, 12)) {
        let config = LstmConfig { input_features: 3, window: 4, hidden: 5, layers: 2, ..LstmConfig::default() };
        let params = LstmParams::init(&config, &mut ChaCha8Rng::seed_from_u64(seed));
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let model = LstmModel::new(config, params, Normalization::identity(3), names).unwrap();
        let p = model.probabilities(&values).unwrap();
        prop_assert_eq!(p.len(), 9);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| *v > 0.0 && *v < 1.0));
    }
}
