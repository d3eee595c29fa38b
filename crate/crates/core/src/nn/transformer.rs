//! Small from-scratch transformer encoder with a prepended pooling token,
//! learned positional embeddings and post-layer-norm blocks. The pooled
//! representation is the final hidden state at position 0.

use ndarray::{s, Array1, Array2};
use rand_chacha::ChaCha8Rng;

use super::{gelu, gelu_derivative, softmax_rows, Linear, ParamVisitor, P1, P2};

#[derive(Debug, Clone)]
pub struct LayerNorm {
    pub gamma: P1,
    pub beta: P1,
    eps: f64,
}

#[derive(Debug, Clone)]
pub struct LnCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: P1::ones(dim),
            beta: P1::zeros(dim),
            eps: 1e-5,
        }
    }

    /// Normalizes each row to zero mean / unit variance, then scales and shifts.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LnCache) {
        let d = x.ncols() as f64;
        let mut x_hat = x.clone();
        let mut inv_std = Array1::zeros(x.nrows());
        for (mut row, is) in x_hat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
            let mean = row.sum() / d;
            row.mapv_inplace(|v| v - mean);
            let var = row.dot(&row) / d;
            *is = 1.0 / (var + self.eps).sqrt();
            let s = *is;
            row.mapv_inplace(|v| v * s);
        }
        let mut y = x_hat.clone();
        for mut row in y.rows_mut() {
            row *= &self.gamma.v;
            row += &self.beta.v;
        }
        (y, LnCache { x_hat, inv_std })
    }

    pub fn backward(&mut self, cache: &LnCache, dy: &Array2<f64>) -> Array2<f64> {
        let d = dy.ncols() as f64;
        let mut dx = Array2::zeros(dy.raw_dim());
        for t in 0..dy.nrows() {
            let dy_row = dy.row(t);
            let xh = cache.x_hat.row(t);
            let g = &dy_row * &self.gamma.v;
            let mean_g = g.sum() / d;
            let mean_gx = g.dot(&xh) / d;
            let is = cache.inv_std[t];
            let mut dst = dx.row_mut(t);
            for (o, (&gv, &xv)) in dst.iter_mut().zip(g.iter().zip(xh.iter())) {
                *o = is * (gv - mean_g - xv * mean_gx);
            }
            let mut gg = self.gamma.g.view_mut();
            gg += &(&dy_row * &xh);
            let mut bg = self.beta.g.view_mut();
            bg += &dy_row;
        }
        dx
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.gamma.visit(&format!("{prefix}.gamma"), f);
        self.beta.visit(&format!("{prefix}.beta"), f);
    }
}

/// One post-LN encoder block: x -> LN(x + MHA(x)) -> LN(. + FFN(.)).
#[derive(Debug, Clone)]
pub struct TransformerLayer {
    q_proj: Linear,
    k_proj: Linear,
    v_proj: Linear,
    o_proj: Linear,
    ln1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    ln2: LayerNorm,
    heads: usize,
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Vec<Array2<f64>>,
    ctx: Array2<f64>,
    ln1: LnCache,
    h1: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
    ln2: LnCache,
}

impl TransformerLayer {
    pub fn new(dim: usize, heads: usize, ff_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        assert!(dim % heads == 0, "model width must divide into heads");
        Self {
            q_proj: Linear::new(dim, dim, true, rng),
            k_proj: Linear::new(dim, dim, true, rng),
            v_proj: Linear::new(dim, dim, true, rng),
            o_proj: Linear::new(dim, dim, true, rng),
            ln1: LayerNorm::new(dim),
            ff1: Linear::new(dim, ff_dim, true, rng),
            ff2: Linear::new(ff_dim, dim, true, rng),
            ln2: LayerNorm::new(dim),
            heads,
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerCache) {
        let t = x.nrows();
        let d = x.ncols();
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let q = self.q_proj.forward_m(x);
        let k = self.k_proj.forward_m(x);
        let v = self.v_proj.forward_m(x);

        let mut ctx = Array2::zeros((t, d));
        let mut attn = Vec::with_capacity(self.heads);
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let qh = q.slice(cols);
            let kh = k.slice(cols);
            let vh = v.slice(cols);
            let mut scores = qh.dot(&kh.t());
            scores *= scale;
            softmax_rows(&mut scores);
            let ctx_h = scores.dot(&vh);
            ctx.slice_mut(cols).assign(&ctx_h);
            attn.push(scores);
        }
        let attn_out = self.o_proj.forward_m(&ctx);
        let (h1, ln1) = self.ln1.forward(&(x + &attn_out));
        let ff_pre = self.ff1.forward_m(&h1);
        let ff_act = ff_pre.mapv(gelu);
        let ff_out = self.ff2.forward_m(&ff_act);
        let (y, ln2) = self.ln2.forward(&(&h1 + &ff_out));
        (
            y,
            LayerCache {
                x: x.clone(),
                q,
                k,
                v,
                attn,
                ctx,
                ln1,
                h1,
                ff_pre,
                ff_act,
                ln2,
            },
        )
    }

    pub fn backward(&mut self, cache: &LayerCache, dy: &Array2<f64>) -> Array2<f64> {
        let d = cache.x.ncols();
        let dh = d / self.heads;
        let scale = 1.0 / (dh as f64).sqrt();

        let d_sum2 = self.ln2.backward(&cache.ln2, dy);
        let d_ff_act = self.ff2.backward_m(&cache.ff_act, &d_sum2);
        let d_ff_pre = &d_ff_act * &cache.ff_pre.mapv(gelu_derivative);
        let d_h1 = self.ff1.backward_m(&cache.h1, &d_ff_pre) + &d_sum2;
        let d_sum1 = self.ln1.backward(&cache.ln1, &d_h1);
        let d_ctx = self.o_proj.backward_m(&cache.ctx, &d_sum1);

        let t = cache.x.nrows();
        let mut dq = Array2::zeros((t, d));
        let mut dk = Array2::zeros((t, d));
        let mut dv = Array2::zeros((t, d));
        for h in 0..self.heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let a = &cache.attn[h];
            let d_ctx_h = d_ctx.slice(cols);
            let vh = cache.v.slice(cols);
            let qh = cache.q.slice(cols);
            let kh = cache.k.slice(cols);

            let da = d_ctx_h.dot(&vh.t());
            dv.slice_mut(cols).assign(&a.t().dot(&d_ctx_h));

            // softmax rows backward
            let mut ds = Array2::zeros((t, t));
            for i in 0..t {
                let arow = a.row(i);
                let darow = da.row(i);
                let dot = darow.dot(&arow);
                let mut out = ds.row_mut(i);
                for (o, (&av, &dav)) in out.iter_mut().zip(arow.iter().zip(darow.iter())) {
                    *o = av * (dav - dot);
                }
            }
            ds *= scale;
            dq.slice_mut(cols).assign(&ds.dot(&kh));
            dk.slice_mut(cols).assign(&ds.t().dot(&qh));
        }

        let mut dx = self.q_proj.backward_m(&cache.x, &dq);
        dx += &self.k_proj.backward_m(&cache.x, &dk);
        dx += &self.v_proj.backward_m(&cache.x, &dv);
        dx += &d_sum1;
        dx
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.q_proj.visit_params(&format!("{prefix}.q"), f);
        self.k_proj.visit_params(&format!("{prefix}.k"), f);
        self.v_proj.visit_params(&format!("{prefix}.v"), f);
        self.o_proj.visit_params(&format!("{prefix}.o"), f);
        self.ln1.visit_params(&format!("{prefix}.ln1"), f);
        self.ff1.visit_params(&format!("{prefix}.ff1"), f);
        self.ff2.visit_params(&format!("{prefix}.ff2"), f);
        self.ln2.visit_params(&format!("{prefix}.ln2"), f);
    }
}

/// The style encoder: shared word embeddings are projected to the model
/// width, a learned pooling token is prepended, learned positional
/// embeddings are added, and the stack's position-0 output is the feature.
#[derive(Debug, Clone)]
pub struct StyleTransformer {
    pub input_proj: Linear,
    cls: P1,
    pos: P2,
    layers: Vec<TransformerLayer>,
}

#[derive(Debug, Clone)]
pub struct StyleCache {
    emb: Array2<f64>,
    layer_caches: Vec<LayerCache>,
}

impl StyleTransformer {
    pub fn new(
        embed_dim: usize,
        dim: usize,
        layers: usize,
        heads: usize,
        ff_dim: usize,
        max_positions: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            input_proj: Linear::new(embed_dim, dim, true, rng),
            cls: P1::uniform(dim, 0.1, rng),
            pos: P2::uniform(max_positions, dim, 0.1, rng),
            layers: (0..layers)
                .map(|_| TransformerLayer::new(dim, heads, ff_dim, rng))
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.cls.v.len()
    }

    pub fn max_tokens(&self) -> usize {
        self.pos.v.nrows() - 1
    }

    /// `emb` is (T, embed_dim) with 1 <= T <= max_tokens().
    pub fn forward(&self, emb: &Array2<f64>) -> (Array1<f64>, StyleCache) {
        let t = emb.nrows();
        assert!(t >= 1 && t <= self.max_tokens(), "sequence length {t} out of range");
        let d = self.dim();
        let p = self.input_proj.forward_m(emb);
        let mut x = Array2::zeros((t + 1, d));
        {
            let mut r0 = x.row_mut(0);
            r0.assign(&self.cls.v);
            r0 += &self.pos.v.row(0);
        }
        for i in 0..t {
            let mut row = x.row_mut(i + 1);
            row.assign(&p.row(i));
            row += &self.pos.v.row(i + 1);
        }
        let mut layer_caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, cache) = layer.forward(&x);
            x = y;
            layer_caches.push(cache);
        }
        let s = x.row(0).to_owned();
        (
            s,
            StyleCache {
                emb: emb.clone(),
                layer_caches,
            },
        )
    }

    /// Backward from the gradient at the pooled feature; returns gradients
    /// for the input embeddings, (T, embed_dim).
    pub fn backward(&mut self, cache: &StyleCache, ds: &Array1<f64>) -> Array2<f64> {
        let t = cache.emb.nrows();
        let d = self.dim();
        let mut dx = Array2::zeros((t + 1, d));
        dx.row_mut(0).assign(ds);
        for (layer, lcache) in self.layers.iter_mut().zip(&cache.layer_caches).rev() {
            dx = layer.backward(lcache, &dx);
        }
        {
            let r0 = dx.row(0);
            let mut cg = self.cls.g.view_mut();
            cg += &r0;
            let mut pg = self.pos.g.row_mut(0);
            pg += &r0;
        }
        for i in 0..t {
            let mut pg = self.pos.g.row_mut(i + 1);
            pg += &dx.row(i + 1);
        }
        let dp = dx.slice(s![1.., ..]).to_owned();
        self.input_proj.backward_m(&cache.emb, &dp)
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor) {
        self.input_proj.visit_params(&format!("{prefix}.proj"), f);
        self.cls.visit(&format!("{prefix}.cls"), f);
        self.pos.visit(&format!("{prefix}.pos"), f);
        for (i, layer) in self.layers.iter_mut().enumerate() {
            layer.visit_params(&format!("{prefix}.layer{i}"), f);
        }
    }
}
