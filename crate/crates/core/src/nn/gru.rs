//! Gated recurrent unit cell and a final-state-pooled encoder.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::{sigmoid, ParamVisitor, P1, P2};

/// z = sigmoid(Wz x + Uz h + bz); r = sigmoid(Wr x + Ur h + br);
/// hbar = tanh(Wh x + Uh (r*h) + bh); h' = (1-z)*h + z*hbar.
#[derive(Debug, Clone)]
pub struct GruCell {
    pub wz: P2,
    pub uz: P2,
    pub bz: P1,
    pub wr: P2,
    pub ur: P2,
    pub br: P1,
    pub wh: P2,
    pub uh: P2,
    pub bh: P1,
}

/// Forward cache for one step.
#[derive(Debug, Clone)]
pub struct GruStep {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    z: Array1<f64>,
    r: Array1<f64>,
    hbar: Array1<f64>,
}

fn outer_add(g: &mut Array2<f64>, d: &Array1<f64>, x: &Array1<f64>) {
    for (mut row, &dv) in g.rows_mut().into_iter().zip(d.iter()) {
        if dv != 0.0 {
            row.scaled_add(dv, x);
        }
    }
}

impl GruCell {
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            wz: P2::xavier(hidden_dim, input_dim, rng),
            uz: P2::xavier(hidden_dim, hidden_dim, rng),
            bz: P1::zeros(hidden_dim),
            wr: P2::xavier(hidden_dim, input_dim, rng),
            ur: P2::xavier(hidden_dim, hidden_dim, rng),
            br: P1::zeros(hidden_dim),
            wh: P2::xavier(hidden_dim, input_dim, rng),
            uh: P2::xavier(hidden_dim, hidden_dim, rng),
            bh: P1::zeros(hidden_dim),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.bz.v.len()
    }

    pub fn input_dim(&self) -> usize {
        self.wz.v.ncols()
    }

    pub fn forward(&self, x: &Array1<f64>, h_prev: &Array1<f64>) -> (Array1<f64>, GruStep) {
        let z = (self.wz.v.dot(x) + self.uz.v.dot(h_prev) + &self.bz.v).mapv(sigmoid);
        let r = (self.wr.v.dot(x) + self.ur.v.dot(h_prev) + &self.br.v).mapv(sigmoid);
        let rh = &r * h_prev;
        let hbar = (self.wh.v.dot(x) + self.uh.v.dot(&rh) + &self.bh.v).mapv(f64::tanh);
        let h = (1.0 - &z) * h_prev + &z * &hbar;
        (
            h,
            GruStep {
                x: x.clone(),
                h_prev: h_prev.clone(),
                z,
                r,
                hbar,
            },
        )
    }

    /// Accumulates parameter gradients; returns (dL/dx, dL/dh_prev).
    pub fn backward(&mut self, step: &GruStep, dh: &Array1<f64>) -> (Array1<f64>, Array1<f64>) {
        let GruStep { x, h_prev, z, r, hbar } = step;

        let dz = dh * &(hbar - h_prev);
        let dhbar = dh * z;
        let mut dh_prev = dh * &(1.0 - z);

        // candidate pre-activation
        let da_h = &dhbar * &(1.0 - hbar * hbar);
        outer_add(&mut self.wh.g, &da_h, x);
        let rh = r * h_prev;
        outer_add(&mut self.uh.g, &da_h, &rh);
        self.bh.g += &da_h;
        let mut dx = self.wh.v.t().dot(&da_h);
        let drh = self.uh.v.t().dot(&da_h);
        let dr = &drh * h_prev;
        dh_prev += &(&drh * r);

        // update gate pre-activation
        let da_z = &dz * z * &(1.0 - z);
        outer_add(&mut self.wz.g, &da_z, x);
        outer_add(&mut self.uz.g, &da_z, h_prev);
        self.bz.g += &da_z;
        dx += &self.wz.v.t().dot(&da_z);
        dh_prev += &self.uz.v.t().dot(&da_z);

        // reset gate pre-activation
        let da_r = &dr * r * &(1.0 - r);
        outer_add(&mut self.wr.g, &da_r, x);
        outer_add(&mut self.ur.g, &da_r, h_prev);
        self.br.g += &da_r;
        dx += &self.wr.v.t().dot(&da_r);
        dh_prev += &self.ur.v.t().dot(&da_r);

        (dx, dh_prev)
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.wz.visit(&format!("{prefix}.wz"), f);
        self.uz.visit(&format!("{prefix}.uz"), f);
        self.bz.visit(&format!("{prefix}.bz"), f);
        self.wr.visit(&format!("{prefix}.wr"), f);
        self.ur.visit(&format!("{prefix}.ur"), f);
        self.br.visit(&format!("{prefix}.br"), f);
        self.wh.visit(&format!("{prefix}.wh"), f);
        self.uh.visit(&format!("{prefix}.uh"), f);
        self.bh.visit(&format!("{prefix}.bh"), f);
    }
}

/// Unidirectional encoder; the representation is the hidden state after the
/// last input token.
#[derive(Debug, Clone)]
pub struct GruEncoder {
    pub cell: GruCell,
}

impl GruEncoder {
    pub fn new(input_dim: usize, hidden_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            cell: GruCell::new(input_dim, hidden_dim, rng),
        }
    }

    /// Runs over (T, input_dim) embedded tokens from a zero initial state.
    pub fn forward(&self, xs: &Array2<f64>) -> (Array1<f64>, Vec<GruStep>) {
        let mut h = Array1::zeros(self.cell.hidden_dim());
        let mut steps = Vec::with_capacity(xs.nrows());
        for t in 0..xs.nrows() {
            let (h_new, step) = self.cell.forward(&xs.row(t).to_owned(), &h);
            h = h_new;
            steps.push(step);
        }
        (h, steps)
    }

    /// Backward from the gradient at the final state; returns per-token input
    /// gradients of shape (T, input_dim).
    pub fn backward(&mut self, steps: &[GruStep], d_final: &Array1<f64>) -> Array2<f64> {
        let mut dxs = Array2::zeros((steps.len(), self.cell.input_dim()));
        let mut dh = d_final.clone();
        for (t, step) in steps.iter().enumerate().rev() {
            let (dx, dh_prev) = self.cell.backward(step, &dh);
            dxs.row_mut(t).assign(&dx);
            dh = dh_prev;
        }
        dxs
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.cell.visit_params(&format!("{prefix}.cell"), f);
    }
}
