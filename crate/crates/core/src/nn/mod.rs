//! Hand-rolled neural layers with explicit forward caches and backward
//! passes, f64 throughout. Single-threaded and deterministic: the same seed
//! and inputs reproduce bitwise-identical parameters and outputs.

mod adam;
mod embedding;
mod gru;
mod linear;
mod transformer;

pub use adam::Adam;
pub(crate) use adam::AdamSlot;
pub use embedding::Embedding;
pub use gru::{GruCell, GruEncoder, GruStep};
pub use linear::Linear;
pub use transformer::{LayerNorm, StyleCache, StyleTransformer, TransformerLayer};

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Callback over named parameters: (name, shape, values, grads).
pub type ParamVisitor<'a> = dyn FnMut(&str, &[usize], &mut [f64], &mut [f64]) + 'a;

/// A matrix parameter with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct P2 {
    pub v: Array2<f64>,
    pub g: Array2<f64>,
}

impl P2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            v: Array2::zeros((rows, cols)),
            g: Array2::zeros((rows, cols)),
        }
    }

    /// Xavier/Glorot uniform init.
    pub fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Self::uniform(rows, cols, bound, rng)
    }

    pub fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        let v = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound));
        Self {
            g: Array2::zeros((rows, cols)),
            v,
        }
    }

    pub fn visit(&mut self, name: &str, f: &mut ParamVisitor) {
        let shape = [self.v.nrows(), self.v.ncols()];
        f(
            name,
            &shape,
            self.v.as_slice_mut().expect("standard layout"),
            self.g.as_slice_mut().expect("standard layout"),
        );
    }
}

/// A vector parameter with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct P1 {
    pub v: Array1<f64>,
    pub g: Array1<f64>,
}

impl P1 {
    pub fn zeros(n: usize) -> Self {
        Self {
            v: Array1::zeros(n),
            g: Array1::zeros(n),
        }
    }

    pub fn ones(n: usize) -> Self {
        Self {
            v: Array1::ones(n),
            g: Array1::zeros(n),
        }
    }

    pub fn uniform(n: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        Self {
            v: Array1::from_shape_fn(n, |_| rng.gen_range(-bound..bound)),
            g: Array1::zeros(n),
        }
    }

    pub fn visit(&mut self, name: &str, f: &mut ParamVisitor) {
        let shape = [self.v.len()];
        f(
            name,
            &shape,
            self.v.as_slice_mut().expect("standard layout"),
            self.g.as_slice_mut().expect("standard layout"),
        );
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

/// GELU, tanh approximation.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

pub fn gelu_derivative(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Numerically stabilized softmax.
pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|v| (v - m).exp());
    let sum = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// In-place row softmax for score matrices.
pub fn softmax_rows(x: &mut Array2<f64>) {
    for mut row in x.rows_mut() {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}
