//! Forward unrolling and backpropagation through time.
//!
//! A window is a row-major `T × F` slice. Layer `l > 0` consumes the hidden
//! sequence of layer `l - 1`; the classifier reads the top layer's final
//! hidden state through a rectifier dense layer and a softmax head.

use rayon::prelude::*;

use super::params::{axpy, LayerParams, LstmParams};
use super::LstmError;

/// Examples per gradient-accumulation chunk. Chunks are summed in index
/// order, which keeps batch gradients independent of the thread count.
const CHUNK: usize = 4;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One labeled window.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub values: &'a [f64],
    pub label: usize,
}

/// Activations of one layer across all steps, kept for the backward pass.
#[derive(Debug, Clone)]
struct LayerTrace {
    /// Post-activation gates `[i, f, g, o]`, `T × 4H`.
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Cached forward activations of one window.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    steps: usize,
    layers: Vec<LayerTrace>,
    dense_pre: Vec<f64>,
    dense_out: Vec<f64>,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ForwardTrace {
    /// Final hidden state of the top layer.
    pub fn last_hidden(&self) -> &[f64] {
        let top = self.layers.last().expect("at least one layer");
        let h = top.h.len() / self.steps;
        &top.h[(self.steps - 1) * h..]
    }

    /// Largest `|h|` over every layer and step.
    pub fn max_abs_hidden(&self) -> f64 {
        self.layers.iter().flat_map(|l| l.h.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn cell_step(
    layer: &LayerParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    c: &mut [f64],
    tanh_c: &mut [f64],
    h: &mut [f64],
) {
    let hidden = layer.hidden();
    gates.copy_from_slice(&layer.b);
    layer.w.matvec_add(x, gates);
    layer.u.matvec_add(h_prev, gates);
    let (gi, rest) = gates.split_at_mut(hidden);
    let (gf, rest) = rest.split_at_mut(hidden);
    let (gg, go) = rest.split_at_mut(hidden);
    for k in 0..hidden {
        let i = sigmoid(gi[k]);
        let f = sigmoid(gf[k]);
        let g = gg[k].tanh();
        let o = sigmoid(go[k]);
        gi[k] = i;
        gf[k] = f;
        gg[k] = g;
        go[k] = o;
        c[k] = f * c_prev[k] + i * g;
        tanh_c[k] = c[k].tanh();
        h[k] = o * tanh_c[k];
    }
}

/// One LSTM cell update: returns `(h', c')`.
pub fn cell_forward(x: &[f64], h: &[f64], c: &[f64], layer: &LayerParams) -> (Vec<f64>, Vec<f64>) {
    let hidden = layer.hidden();
    assert_eq!(x.len(), layer.in_dim(), "input width");
    assert_eq!(h.len(), hidden, "hidden width");
    assert_eq!(c.len(), hidden, "cell width");
    let mut gates = vec![0.0; 4 * hidden];
    let (mut c_out, mut tanh_c, mut h_out) = (vec![0.0; hidden], vec![0.0; hidden], vec![0.0; hidden]);
    cell_step(layer, x, h, c, &mut gates, &mut c_out, &mut tanh_c, &mut h_out);
    (h_out, c_out)
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-log softmax(logits)[label]`, computed without forming probabilities.
fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    lse - logits[label]
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_window(params: &LstmParams, window: &[f64], steps: usize) -> Result<(), LstmError> {
    let features = params.layers[0].in_dim();
    if steps == 0 || window.len() != steps * features {
        return Err(LstmError::Shape(format!(
            "window has {} values, expected {steps} steps × {features} features",
            window.len()
        )));
    }
    Ok(())
}

/// Unrolls `steps` time steps through every layer and the classifier heads.
pub fn forward(params: &LstmParams, window: &[f64], steps: usize) -> Result<ForwardTrace, LstmError> {
    check_window(params, window, steps)?;
    let mut layers: Vec<LayerTrace> = Vec::with_capacity(params.layers.len());
    for (l, layer) in params.layers.iter().enumerate() {
        let hidden = layer.hidden();
        let in_dim = layer.in_dim();
        let mut trace = LayerTrace {
            gates: vec![0.0; steps * 4 * hidden],
            c: vec![0.0; steps * hidden],
            tanh_c: vec![0.0; steps * hidden],
            h: vec![0.0; steps * hidden],
        };
        let input: &[f64] = if l == 0 { window } else { &layers[l - 1].h };
        let zeros = vec![0.0; hidden];
        for t in 0..steps {
            let x = &input[t * in_dim..(t + 1) * in_dim];
            let (h_done, h_rest) = trace.h.split_at_mut(t * hidden);
            let (c_done, c_rest) = trace.c.split_at_mut(t * hidden);
            let h_prev = if t == 0 { &zeros[..] } else { &h_done[(t - 1) * hidden..] };
            let c_prev = if t == 0 { &zeros[..] } else { &c_done[(t - 1) * hidden..] };
            cell_step(
                layer,
                x,
                h_prev,
                c_prev,
                &mut trace.gates[t * 4 * hidden..(t + 1) * 4 * hidden],
                &mut c_rest[..hidden],
                &mut trace.tanh_c[t * hidden..(t + 1) * hidden],
                &mut h_rest[..hidden],
            );
        }
        layers.push(trace);
    }

    let top = layers.last().expect("at least one layer");
    let hidden = params.dense_w.cols;
    let last = &top.h[(steps - 1) * hidden..];
    let mut dense_pre = params.dense_b.clone();
    params.dense_w.matvec_add(last, &mut dense_pre);
    let dense_out: Vec<f64> = dense_pre.iter().map(|v| v.max(0.0)).collect();
    let mut logits = params.out_b.clone();
    params.out_w.matvec_add(&dense_out, &mut logits);
    let probs = softmax(&logits);
    Ok(ForwardTrace { steps, layers, dense_pre, dense_out, logits, probs })
}

/// Accumulates `scale · ∂loss/∂θ` for one example into `grads`.
fn backward(
    params: &LstmParams,
    window: &[f64],
    trace: &ForwardTrace,
    label: usize,
    scale: f64,
    grads: &mut LstmParams,
) {
    let steps = trace.steps;
    let mut d_logits: Vec<f64> = trace.probs.iter().map(|p| scale * p).collect();
    d_logits[label] -= scale;

    grads.out_w.outer_add(&d_logits, &trace.dense_out);
    axpy(1.0, &d_logits, &mut grads.out_b);
    let mut d_dense = vec![0.0; trace.dense_out.len()];
    params.out_w.matvec_t_add(&d_logits, &mut d_dense);
    for (d, pre) in d_dense.iter_mut().zip(&trace.dense_pre) {
        if *pre <= 0.0 {
            *d = 0.0;
        }
    }
    grads.dense_w.outer_add(&d_dense, trace.last_hidden());
    axpy(1.0, &d_dense, &mut grads.dense_b);

    let top_hidden = params.dense_w.cols;
    // Gradient flowing into the current layer's hidden sequence.
    let mut dh_seq = vec![0.0; steps * top_hidden];
    params.dense_w.matvec_t_add(&d_dense, &mut dh_seq[(steps - 1) * top_hidden..]);

    for l in (0..params.layers.len()).rev() {
        let layer = &params.layers[l];
        let g = &mut grads.layers[l];
        let lt = &trace.layers[l];
        let hidden = layer.hidden();
        let in_dim = layer.in_dim();
        let input: &[f64] = if l == 0 { window } else { &trace.layers[l - 1].h };
        let mut dx_seq = if l > 0 { vec![0.0; steps * in_dim] } else { Vec::new() };

        let mut dh_next = vec![0.0; hidden];
        let mut dc_next = vec![0.0; hidden];
        let mut dz = vec![0.0; 4 * hidden];
        for t in (0..steps).rev() {
            let gates = &lt.gates[t * 4 * hidden..(t + 1) * 4 * hidden];
            let tanh_c = &lt.tanh_c[t * hidden..(t + 1) * hidden];
            let dh_in = &dh_seq[t * hidden..(t + 1) * hidden];
            for k in 0..hidden {
                let (i, f, gc, o) = (gates[k], gates[hidden + k], gates[2 * hidden + k], gates[3 * hidden + k]);
                let c_prev = if t > 0 { lt.c[(t - 1) * hidden + k] } else { 0.0 };
                let dh = dh_in[k] + dh_next[k];
                let tc = tanh_c[k];
                let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
                dz[k] = dc * gc * i * (1.0 - i);
                dz[hidden + k] = dc * c_prev * f * (1.0 - f);
                dz[2 * hidden + k] = dc * i * (1.0 - gc * gc);
                dz[3 * hidden + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            g.w.outer_add(&dz, &input[t * in_dim..(t + 1) * in_dim]);
            if t > 0 {
                g.u.outer_add(&dz, &lt.h[(t - 1) * hidden..t * hidden]);
            }
            axpy(1.0, &dz, &mut g.b);
            dh_next.fill(0.0);
            layer.u.matvec_t_add(&dz, &mut dh_next);
            if l > 0 {
                layer.w.matvec_t_add(&dz, &mut dx_seq[t * in_dim..(t + 1) * in_dim]);
            }
        }
        dh_seq = dx_seq;
    }
}

/// Summed loss, correct-prediction count and gradient of one batch.
#[derive(Debug, Clone)]
pub struct BatchOutcome {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    pub correct: usize,
    /// Gradient of the mean loss, unclipped.
    pub grads: LstmParams,
}

/// Mean cross-entropy and its exact gradient over `examples`.
pub fn batch_gradients(params: &LstmParams, examples: &[Example<'_>], steps: usize) -> Result<BatchOutcome, LstmError> {
    if examples.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    let classes = params.out_b.len();
    if let Some(e) = examples.iter().find(|e| e.label >= classes) {
        return Err(LstmError::Shape(format!("label {} out of range for {classes} classes", e.label)));
    }
    let scale = 1.0 / examples.len() as f64;
    let partials: Vec<Result<(f64, usize, LstmParams), LstmError>> = examples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut grads = params.zeros_like();
            let (mut loss, mut correct) = (0.0, 0);
            for ex in chunk {
                let trace = forward(params, ex.values, steps)?;
                loss += cross_entropy(&trace.logits, ex.label);
                correct += usize::from(argmax(&trace.probs) == ex.label);
                backward(params, ex.values, &trace, ex.label, scale, &mut grads);
            }
            Ok((loss, correct, grads))
        })
        .collect();

    let mut grads = params.zeros_like();
    let (mut loss, mut correct) = (0.0, 0);
    for part in partials {
        let (l, c, g) = part?;
        loss += l;
        correct += c;
        grads.add_assign(&g);
    }
    Ok(BatchOutcome { loss: loss * scale, correct, grads })
}

/// Mean cross-entropy and gradients, clipped to `clip_norm` when given.
pub fn loss_and_grads(
    params: &LstmParams,
    examples: &[Example<'_>],
    steps: usize,
    clip_norm: Option<f64>,
) -> Result<(f64, LstmParams), LstmError> {
    let mut outcome = batch_gradients(params, examples, steps)?;
    if !outcome.loss.is_finite() {
        return Err(LstmError::NonFiniteLoss { epoch: 0, batch: 0, loss: outcome.loss });
    }
    if let Some(max) = clip_norm {
        clip_global_norm(&mut outcome.grads, max);
    }
    Ok((outcome.loss, outcome.grads))
}

/// Rescales `grads` so its global L2 norm is at most `max`.
pub fn clip_global_norm(grads: &mut LstmParams, max: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max {
        grads.scale(max / norm);
    }
    norm
}

/// Mean loss and correct count without gradients.
pub fn evaluate_loss(params: &LstmParams, examples: &[Example<'_>], steps: usize) -> Result<(f64, usize), LstmError> {
    if examples.is_empty() {
        return Err(LstmError::EmptyBatch);
    }
    let parts: Vec<Result<(f64, usize), LstmError>> = examples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let (mut loss, mut correct) = (0.0, 0);
            for ex in chunk {
                let trace = forward(params, ex.values, steps)?;
                loss += cross_entropy(&trace.logits, ex.label);
                correct += usize::from(argmax(&trace.probs) == ex.label);
            }
            Ok((loss, correct))
        })
        .collect();
    let (mut loss, mut correct) = (0.0, 0);
    for p in parts {
        let (l, c) = p?;
        loss += l;
        correct += c;
    }
    Ok((loss / examples.len() as f64, correct))
}
