//! Training losses: per-sentence NLL, the two bidirectional in-batch
//! contrastive losses, and their weighted combination.
//!
//! The contrastive loss treats row i of the two feature blocks as the
//! positive pair; every other feature in the batch (2n-2 of them) is a
//! negative for that anchor. Losses are summed over the batch; NLL is a
//! per-sentence mean over tokens.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied inside log() so a zero probability cannot produce infinity.
pub const PROB_FLOOR: f64 = 1e-12;

/// Loss weights for the combined objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_content: f64,
    pub lambda_style: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_content: 0.1,
            lambda_style: 0.1,
        }
    }
}

/// Mean token-level negative log probability of the gold tokens.
pub fn nll_loss(probs: &[Array1<f64>], target: &[usize]) -> Result<f64> {
    if probs.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "nll probs vs target".to_string(),
            left: probs.len(),
            right: target.len(),
        });
    }
    if target.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut sum = 0.0;
    for (p, &y) in probs.iter().zip(target) {
        sum -= p[y].max(PROB_FLOOR).ln();
    }
    Ok(sum / target.len() as f64)
}

/// NLL plus its gradient with respect to the probability vectors.
pub fn nll_loss_grad(probs: &[Array1<f64>], target: &[usize]) -> Result<(f64, Vec<Array1<f64>>)> {
    let loss = nll_loss(probs, target)?;
    let t = target.len() as f64;
    let grads = probs
        .iter()
        .zip(target)
        .map(|(p, &y)| {
            let mut g = Array1::zeros(p.len());
            if p[y] > PROB_FLOOR {
                g[y] = -1.0 / (t * p[y]);
            }
            g
        })
        .collect();
    Ok((loss, grads))
}

/// A batch of paired feature rows for the contrastive loss.
#[derive(Debug, Clone)]
pub struct ContrastiveBatch {
    pub anchors_a: Array2<f64>,
    pub anchors_b: Array2<f64>,
    pub temperature: f64,
    /// L2-normalize rows before the dot products (cosine similarity).
    pub normalize: bool,
}

impl ContrastiveBatch {
    pub fn new(anchors_a: Array2<f64>, anchors_b: Array2<f64>, temperature: f64) -> Result<Self> {
        if anchors_a.nrows() == 0 {
            return Err(Error::EmptySequence);
        }
        if anchors_a.dim() != anchors_b.dim() {
            return Err(Error::DimMismatch {
                what: "contrastive batch".to_string(),
                expected: anchors_a.ncols(),
                actual: anchors_b.ncols(),
            });
        }
        if !(temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(Self {
            anchors_a,
            anchors_b,
            temperature,
            normalize: true,
        })
    }

    pub fn with_normalize(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }
}

fn l2_normalize_rows(x: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let norms: Array1<f64> = x
        .rows()
        .into_iter()
        .map(|r| r.dot(&r).sqrt().max(PROB_FLOOR))
        .collect();
    let mut out = x.clone();
    for (mut row, &n) in out.rows_mut().into_iter().zip(norms.iter()) {
        row.mapv_inplace(|v| v / n);
    }
    (out, norms)
}

/// Pulls the gradient w.r.t. normalized rows back to the raw rows:
/// d/dx of x/|x| applied to g is (g - xhat (xhat . g)) / |x|.
fn normalize_backward(g_hat: &Array2<f64>, x_hat: &Array2<f64>, norms: &Array1<f64>) -> Array2<f64> {
    let mut out = g_hat.clone();
    for ((mut row, xh), &n) in out
        .rows_mut()
        .into_iter()
        .zip(x_hat.rows())
        .zip(norms.iter())
    {
        let proj = xh.dot(&row);
        for (o, &x) in row.iter_mut().zip(xh.iter()) {
            *o = (*o - x * proj) / n;
        }
    }
    out
}

fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

struct AnchorTerms<'a> {
    /// (logit, which block the partner lives in, partner row)
    logits: Vec<(f64, bool, usize)>,
    own: ArrayView1<'a, f64>,
}

/// Bidirectional in-batch InfoNCE, summed over the batch.
pub fn infonce_bidirectional(batch: &ContrastiveBatch) -> f64 {
    infonce_core(batch, false).0
}

/// Loss plus gradients with respect to the raw `anchors_a` / `anchors_b`.
pub fn infonce_bidirectional_grad(batch: &ContrastiveBatch) -> (f64, Array2<f64>, Array2<f64>) {
    let (loss, grads) = infonce_core(batch, true);
    let (ga, gb) = grads.expect("gradients requested");
    (loss, ga, gb)
}

#[allow(clippy::type_complexity)]
fn infonce_core(
    batch: &ContrastiveBatch,
    want_grad: bool,
) -> (f64, Option<(Array2<f64>, Array2<f64>)>) {
    let n = batch.anchors_a.nrows();
    let tau = batch.temperature;

    let (a, a_norms) = if batch.normalize {
        l2_normalize_rows(&batch.anchors_a)
    } else {
        (batch.anchors_a.clone(), Array1::ones(n))
    };
    let (b, b_norms) = if batch.normalize {
        l2_normalize_rows(&batch.anchors_b)
    } else {
        (batch.anchors_b.clone(), Array1::ones(n))
    };

    let s_ab = a.dot(&b.t()) / tau; // s_ab[i][j] = a_i . b_j / tau
    let s_aa = a.dot(&a.t()) / tau;
    let s_bb = b.dot(&b.t()) / tau;

    let mut loss = 0.0;
    let mut ga = Array2::zeros(a.raw_dim());
    let mut gb = Array2::zeros(b.raw_dim());

    // One anchor at a time: positive first, then the 2n-2 negatives.
    let mut process = |terms: AnchorTerms, own_is_a: bool, own_row: usize| {
        let logits: Vec<f64> = terms.logits.iter().map(|t| t.0).collect();
        let lse = log_sum_exp(&logits);
        loss += lse - logits[0];
        if !want_grad {
            return;
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|v| (v - m).exp()).sum();
        for (k, &(logit, partner_in_b, j)) in terms.logits.iter().enumerate() {
            let p = (logit - m).exp() / denom;
            let coeff = (p - if k == 0 { 1.0 } else { 0.0 }) / tau;
            if coeff == 0.0 {
                continue;
            }
            let partner = if partner_in_b { b.row(j) } else { a.row(j) };
            let own_grad = if own_is_a {
                ga.row_mut(own_row)
            } else {
                gb.row_mut(own_row)
            };
            ndarray::Zip::from(own_grad)
                .and(partner)
                .for_each(|g, &v| *g += coeff * v);
            let mut partner_grad = if partner_in_b {
                gb.row_mut(j)
            } else {
                ga.row_mut(j)
            };
            ndarray::Zip::from(&mut partner_grad)
                .and(terms.own)
                .for_each(|g, &v| *g += coeff * v);
        }
    };

    for i in 0..n {
        // anchor a_i: positive (a_i, b_i); negatives a_j and b_j for j != i
        let mut logits = Vec::with_capacity(2 * n - 1);
        logits.push((s_ab[(i, i)], true, i));
        for j in 0..n {
            if j != i {
                logits.push((s_aa[(i, j)], false, j));
                logits.push((s_ab[(i, j)], true, j));
            }
        }
        process(
            AnchorTerms {
                logits,
                own: a.row(i),
            },
            true,
            i,
        );

        // anchor b_i: positive (b_i, a_i); negatives b_j and a_j for j != i
        let mut logits = Vec::with_capacity(2 * n - 1);
        logits.push((s_ab[(i, i)], false, i));
        for j in 0..n {
            if j != i {
                logits.push((s_bb[(i, j)], true, j));
                logits.push((s_ab[(j, i)], false, j));
            }
        }
        process(
            AnchorTerms {
                logits,
                own: b.row(i),
            },
            false,
            i,
        );
    }

    if !want_grad {
        return (loss, None);
    }
    let (ga, gb) = if batch.normalize {
        (
            normalize_backward(&ga, &a, &a_norms),
            normalize_backward(&gb, &b, &b_norms),
        )
    } else {
        (ga, gb)
    };
    (loss, Some((ga, gb)))
}

/// Content contrastive loss over (c_X, c_Y) rows.
pub fn content_contrastive_loss(
    c_x: Array2<f64>,
    c_y: Array2<f64>,
    temperature: f64,
    normalize: bool,
) -> Result<f64> {
    Ok(infonce_bidirectional(
        &ContrastiveBatch::new(c_x, c_y, temperature)?.with_normalize(normalize),
    ))
}

/// Style contrastive loss over (s_Y, s_Z) rows.
pub fn style_contrastive_loss(
    s_y: Array2<f64>,
    s_z: Array2<f64>,
    temperature: f64,
    normalize: bool,
) -> Result<f64> {
    Ok(infonce_bidirectional(
        &ContrastiveBatch::new(s_y, s_z, temperature)?.with_normalize(normalize),
    ))
}

/// Batch objective: summed sentence NLLs plus the weighted contrastive terms.
pub fn total_loss(nll_sum: f64, ccl: f64, scl: f64, weights: &LossWeights) -> f64 {
    nll_sum + weights.lambda_content * ccl + weights.lambda_style * scl
}
