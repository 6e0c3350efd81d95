//! Central-difference check of the analytic BPTT gradients on a small
//! two-layer network (T=5, F=3, H=4, C=3).

use har_core::lstm::{loss_and_grads, Example, LstmConfig, LstmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

struct Fixture {
    params: LstmParams,
    windows: Vec<Vec<f64>>,
    labels: Vec<usize>,
    steps: usize,
}

fn fixture(seed: u64) -> Fixture {
    let config = LstmConfig { input_features: 3, window: 5, hidden: 4, layers: 2, classes: 3, ..LstmConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = LstmParams::init(&config, &mut rng);
    // Random biases everywhere so no coordinate sits at a trivially zero
    // gradient; dense biases stay positive to keep the rectifier active.
    for l in &mut params.layers {
        l.b.iter_mut().for_each(|b| *b += rng.random_range(-0.5..0.5));
    }
    params.dense_b.iter_mut().for_each(|b| *b = rng.random_range(0.1..0.5));
    params.out_b.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    let windows = (0..2).map(|_| (0..15).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
    Fixture { params, windows, labels: vec![0, 2], steps: 5 }
}

fn loss(f: &Fixture, params: &LstmParams) -> f64 {
    let batch: Vec<Example> =
        f.windows.iter().zip(&f.labels).map(|(w, &label)| Example { values: w, label }).collect();
    loss_and_grads(params, &batch, f.steps, None).unwrap().0
}

/// Worst relative error over every coordinate of every tensor, by tensor.
pub fn gradient_check(seed: u64) -> Vec<(String, f64)> {
    let f = fixture(seed);
    let batch: Vec<Example> =
        f.windows.iter().zip(&f.labels).map(|(w, &label)| Example { values: w, label }).collect();
    let (_, grads) = loss_and_grads(&f.params, &batch, f.steps, None).unwrap();
    let names = f.params.tensor_names();
    let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();

    let mut worst = Vec::new();
    for (ti, name) in names.iter().enumerate() {
        let len = analytic[ti].len();
        let mut max_rel: f64 = 0.0;
        for k in 0..len {
            let mut plus = f.params.clone();
            plus.tensors_mut()[ti][k] += STEP;
            let mut minus = f.params.clone();
            minus.tensors_mut()[ti][k] -= STEP;
            let numeric = (loss(&f, &plus) - loss(&f, &minus)) / (2.0 * STEP);
            let a = analytic[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            max_rel = max_rel.max(rel);
        }
        worst.push((name.clone(), max_rel));
    }
    worst
}
