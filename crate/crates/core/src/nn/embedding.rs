//! Token embedding table shared by both encoders and the decoder input.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::{ParamVisitor, P2};

#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: P2,
}

impl Embedding {
    pub fn new(vocab_size: usize, dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            table: P2::uniform(vocab_size, dim, 0.1, rng),
        }
    }

    /// Replaces the table values, e.g. with pretrained vectors.
    pub fn set_table(&mut self, table: Array2<f64>) {
        assert_eq!(table.dim(), self.table.v.dim());
        self.table.v = table;
        self.table.g.fill(0.0);
    }

    pub fn dim(&self) -> usize {
        self.table.v.ncols()
    }

    pub fn vocab_size(&self) -> usize {
        self.table.v.nrows()
    }

    pub fn lookup(&self, id: usize) -> Array1<f64> {
        self.table.v.row(id).to_owned()
    }

    /// (T, dim) matrix of embedded tokens.
    pub fn forward(&self, ids: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (t, &id) in ids.iter().enumerate() {
            out.row_mut(t).assign(&self.table.v.row(id));
        }
        out
    }

    pub fn backward(&mut self, ids: &[usize], d_out: &Array2<f64>) {
        for (t, &id) in ids.iter().enumerate() {
            let mut g = self.table.g.row_mut(id);
            g += &d_out.row(t);
        }
    }

    pub fn backward_one(&mut self, id: usize, d: &Array1<f64>) {
        let mut g = self.table.g.row_mut(id);
        g += d;
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.table.visit(&format!("{prefix}.table"), f);
    }
}
