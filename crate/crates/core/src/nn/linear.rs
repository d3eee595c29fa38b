//! Affine map, vector and matrix forms.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::{ParamVisitor, P1, P2};

/// y = W x + b with W of shape (out, in).
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: P2,
    pub b: Option<P1>,
}

impl Linear {
    pub fn new(in_dim: usize, out_dim: usize, bias: bool, rng: &mut ChaCha8Rng) -> Self {
        Self {
            w: P2::xavier(out_dim, in_dim, rng),
            b: bias.then(|| P1::zeros(out_dim)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.v.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.w.v.nrows()
    }

    pub fn forward(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut y = self.w.v.dot(x);
        if let Some(b) = &self.b {
            y += &b.v;
        }
        y
    }

    /// Accumulates parameter gradients and returns dL/dx.
    pub fn backward(&mut self, x: &Array1<f64>, dy: &Array1<f64>) -> Array1<f64> {
        for (mut grow, &d) in self.w.g.rows_mut().into_iter().zip(dy.iter()) {
            if d != 0.0 {
                grow.scaled_add(d, x);
            }
        }
        if let Some(b) = &mut self.b {
            b.g += dy;
        }
        self.w.v.t().dot(dy)
    }

    /// Row-wise forward: (T, in) -> (T, out).
    pub fn forward_m(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut y = x.dot(&self.w.v.t());
        if let Some(b) = &self.b {
            for mut row in y.rows_mut() {
                row += &b.v;
            }
        }
        y
    }

    /// Row-wise backward; returns dL/dx of shape (T, in).
    pub fn backward_m(&mut self, x: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        self.w.g += &dy.t().dot(x);
        if let Some(b) = &mut self.b {
            b.g += &dy.sum_axis(ndarray::Axis(0));
        }
        dy.dot(&self.w.v)
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.w.visit(&format!("{prefix}.w"), f);
        if let Some(b) = &mut self.b {
            b.visit(&format!("{prefix}.b"), f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut lin = Linear::new(3, 2, true, &mut rng);
        let x = array![0.5, -1.0, 2.0];
        let dy = array![1.0, -0.5];
        let dx = lin.backward(&x, &dy);

        let h = 1e-6;
        let loss = |l: &Linear, x: &Array1<f64>| l.forward(x).dot(&dy);
        for i in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (loss(&lin, &xp) - loss(&lin, &xm)) / (2.0 * h);
            assert!((dx[i] - fd).abs() < 1e-6);
        }
        for r in 0..2 {
            for c in 0..3 {
                let mut lp = lin.clone();
                let mut lm = lin.clone();
                lp.w.v[(r, c)] += h;
                lm.w.v[(r, c)] -= h;
                let fd = (loss(&lp, &x) - loss(&lm, &x)) / (2.0 * h);
                assert!((lin.w.g[(r, c)] - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn matrix_form_agrees_with_vector_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let lin = Linear::new(4, 3, true, &mut rng);
        let x = array![[0.1, 0.2, 0.3, 0.4], [1.0, -1.0, 0.5, 0.0]];
        let ym = lin.forward_m(&x);
        for t in 0..2 {
            let yv = lin.forward(&x.row(t).to_owned());
            for j in 0..3 {
                assert!((ym[(t, j)] - yv[j]).abs() < 1e-12);
            }
        }
    }
}
