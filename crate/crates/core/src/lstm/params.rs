use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::LstmConfig;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `out[r] += Σ_c self[r][c] · x[c]`
    #[inline]
    pub fn matvec_add(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// `out[c] += Σ_r self[r][c] · y[r]`
    #[inline]
    pub fn matvec_t_add(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &s) in y.iter().enumerate() {
            if s != 0.0 {
                axpy(s, self.row(r), out);
            }
        }
    }

    /// `self += y ⊗ x`
    #[inline]
    pub fn outer_add(&mut self, y: &[f64], x: &[f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        for (r, &s) in y.iter().enumerate() {
            if s != 0.0 {
                axpy(s, x, self.row_mut(r));
            }
        }
    }
}

/// Dot product with four independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks_a = a.chunks_exact(4);
    let chunks_b = b.chunks_exact(4);
    let (rest_a, rest_b) = (chunks_a.remainder(), chunks_b.remainder());
    for (ca, cb) in chunks_a.zip(chunks_b) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut sum = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in rest_a.iter().zip(rest_b) {
        sum += x * y;
    }
    sum
}

/// `y += alpha · x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Weights of one LSTM layer. Gate blocks are stacked in the order
/// input, forget, cell candidate, output; each block has `hidden` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// `4H × in_dim`
    pub w: Matrix,
    /// `4H × H`
    pub u: Matrix,
    /// `4H`
    pub b: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(in_dim: usize, hidden: usize) -> Self {
        LayerParams { w: Matrix::zeros(4 * hidden, in_dim), u: Matrix::zeros(4 * hidden, hidden), b: vec![0.0; 4 * hidden] }
    }

    pub fn hidden(&self) -> usize {
        self.u.cols
    }

    pub fn in_dim(&self) -> usize {
        self.w.cols
    }
}

/// All trainable tensors: stacked LSTM layers, the rectifier dense head and
/// the softmax output head.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub layers: Vec<LayerParams>,
    /// `H × H`
    pub dense_w: Matrix,
    pub dense_b: Vec<f64>,
    /// `C × H`
    pub out_w: Matrix,
    pub out_b: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(config: &LstmConfig) -> Self {
        let h = config.hidden;
        let layers = (0..config.layers)
            .map(|l| LayerParams::zeros(if l == 0 { config.input_features } else { h }, h))
            .collect();
        LstmParams {
            layers,
            dense_w: Matrix::zeros(h, h),
            dense_b: vec![0.0; h],
            out_w: Matrix::zeros(config.classes, h),
            out_b: vec![0.0; config.classes],
        }
    }

    /// Uniform fan-in scaled weights, zero biases except the forget-gate
    /// slice, which starts at 1.
    pub fn init<R: Rng>(config: &LstmConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let h = config.hidden;
        let mut fill = |m: &mut Matrix, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut m.data {
                *v = rng.random_range(-bound..bound);
            }
        };
        for layer in &mut p.layers {
            let in_dim = layer.in_dim();
            fill(&mut layer.w, in_dim);
            fill(&mut layer.u, h);
            layer.b[h..2 * h].fill(1.0);
        }
        fill(&mut p.dense_w, h);
        fill(&mut p.out_w, h);
        p
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            layers: self.layers.iter().map(|l| LayerParams::zeros(l.in_dim(), l.hidden())).collect(),
            dense_w: Matrix::zeros(self.dense_w.rows, self.dense_w.cols),
            dense_b: vec![0.0; self.dense_b.len()],
            out_w: Matrix::zeros(self.out_w.rows, self.out_w.cols),
            out_b: vec![0.0; self.out_b.len()],
        }
    }

    /// Tensor names in the fixed traversal order shared by [`Self::tensors`]
    /// and [`Self::tensors_mut`].
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for l in 0..self.layers.len() {
            names.push(format!("layers[{l}].w"));
            names.push(format!("layers[{l}].u"));
            names.push(format!("layers[{l}].b"));
        }
        names.extend(["dense.w", "dense.b", "output.w", "output.b"].map(String::from));
        names
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(&l.w.data);
            out.push(&l.u.data);
            out.push(&l.b);
        }
        out.push(&self.dense_w.data);
        out.push(&self.dense_b);
        out.push(&self.out_w.data);
        out.push(&self.out_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.w.data);
            out.push(&mut l.u.data);
            out.push(&mut l.b);
        }
        out.push(&mut self.dense_w.data);
        out.push(&mut self.dense_b);
        out.push(&mut self.out_w.data);
        out.push(&mut self.out_b);
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &LstmParams) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(1.0, b, a);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}
