//! The dual-encoder/decoder model: a GRU content encoder, a transformer
//! style encoder, and a GRU decoder seeded with the concatenated features.
//!
//! Word embeddings are shared between both encoders and the decoder input.
//! All forward passes are deterministic; training-mode variants return
//! explicit caches consumed by the matching backward methods.

use ndarray::{concatenate, Array1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::corpus::{Vocabulary, EOS, SOS};
use crate::error::{Error, Result};
use crate::nn::{
    softmax, Embedding, GruCell, GruEncoder, GruStep, Linear, ParamVisitor, StyleCache,
    StyleTransformer,
};

pub type ContentFeature = Array1<f64>;
pub type StyleFeature = Array1<f64>;

#[derive(Debug, Clone)]
pub struct ModelState {
    pub cfg: ModelConfig,
    pub vocab_hash: String,
    vocab_size: usize,
    pub embedding: Embedding,
    content_encoder: GruEncoder,
    style_encoder: StyleTransformer,
    /// Optional projection of [c; s] to a smaller decoder hidden size.
    bridge: Option<Linear>,
    decoder: GruCell,
    out_proj: Linear,
}

/// Cache for one encoder pass in training mode.
pub struct ContentCache {
    ids: Vec<usize>,
    steps: Vec<GruStep>,
}

pub struct StyleEncCache {
    ids: Vec<usize>,
    inner: StyleCache,
}

/// Cache for one teacher-forced decode in training mode.
pub struct DecoderCache {
    /// Token fed at each step (SOS first).
    inputs: Vec<usize>,
    steps: Vec<GruStep>,
    /// Hidden state after each step.
    hidden: Vec<Array1<f64>>,
    /// Input to the bridge, when one is configured.
    bridge_in: Option<Array1<f64>>,
}

impl ModelState {
    pub fn new(cfg: &ModelConfig, vocab: &Vocabulary, seed: u64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::with_hash(cfg, vocab.len(), vocab.hash(), seed))
    }

    /// Construction from raw vocabulary facts (checkpoint loading).
    pub(crate) fn with_hash(
        cfg: &ModelConfig,
        vocab_size: usize,
        vocab_hash: String,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embedding = Embedding::new(vocab_size, cfg.embed_dim, &mut rng);
        let content_encoder = GruEncoder::new(cfg.embed_dim, cfg.content_dim, &mut rng);
        let style_encoder = StyleTransformer::new(
            cfg.embed_dim,
            cfg.style_dim,
            cfg.style_layers,
            cfg.style_heads,
            cfg.style_ff_dim(),
            cfg.max_len + 1,
            &mut rng,
        );
        let bridge = cfg
            .decoder_dim
            .map(|d| Linear::new(cfg.content_dim + cfg.style_dim, d, true, &mut rng));
        let decoder = GruCell::new(cfg.embed_dim, cfg.decoder_hidden_dim(), &mut rng);
        let out_proj = Linear::new(cfg.decoder_hidden_dim(), vocab_size, false, &mut rng);
        Self {
            cfg: cfg.clone(),
            vocab_hash,
            vocab_size,
            embedding,
            content_encoder,
            style_encoder,
            bridge,
            decoder,
            out_proj,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        if ids.len() > self.cfg.max_len + 1 {
            return Err(Error::LengthMismatch {
                what: "sequence exceeds max_len".to_string(),
                left: ids.len(),
                right: self.cfg.max_len + 1,
            });
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.vocab_size) {
            return Err(Error::VocabMismatch(format!(
                "token id {bad} out of range for vocabulary of {}",
                self.vocab_size
            )));
        }
        Ok(())
    }

    /// Final hidden state of the content GRU over the embedded tokens.
    pub fn encode_content(&self, ids: &[usize]) -> Result<ContentFeature> {
        self.check_ids(ids)?;
        let emb = self.embedding.forward(ids);
        Ok(self.content_encoder.forward(&emb).0)
    }

    pub fn encode_content_train(&self, ids: &[usize]) -> Result<(ContentFeature, ContentCache)> {
        self.check_ids(ids)?;
        let emb = self.embedding.forward(ids);
        let (c, steps) = self.content_encoder.forward(&emb);
        Ok((
            c,
            ContentCache {
                ids: ids.to_vec(),
                steps,
            },
        ))
    }

    pub fn backward_content(&mut self, cache: &ContentCache, dc: &Array1<f64>) {
        let dxs = self.content_encoder.backward(&cache.steps, dc);
        self.embedding.backward(&cache.ids, &dxs);
    }

    /// Pooled (position-0) output of the style transformer.
    pub fn encode_style(&self, ids: &[usize]) -> Result<StyleFeature> {
        self.check_ids(ids)?;
        if ids.len() > self.style_encoder.max_tokens() {
            return Err(Error::LengthMismatch {
                what: "style encoder input".to_string(),
                left: ids.len(),
                right: self.style_encoder.max_tokens(),
            });
        }
        let emb = self.embedding.forward(ids);
        Ok(self.style_encoder.forward(&emb).0)
    }

    pub fn encode_style_train(&self, ids: &[usize]) -> Result<(StyleFeature, StyleEncCache)> {
        self.check_ids(ids)?;
        let emb = self.embedding.forward(ids);
        let (s, inner) = self.style_encoder.forward(&emb);
        Ok((
            s,
            StyleEncCache {
                ids: ids.to_vec(),
                inner,
            },
        ))
    }

    pub fn backward_style(&mut self, cache: &StyleEncCache, ds: &Array1<f64>) {
        let demb = self.style_encoder.backward(&cache.inner, ds);
        self.embedding.backward(&cache.ids, &demb);
    }

    /// The decoder's initial hidden state: [c; s], optionally projected.
    pub fn initial_state(&self, c: &ContentFeature, s: &StyleFeature) -> Result<Array1<f64>> {
        if c.len() != self.cfg.content_dim {
            return Err(Error::DimMismatch {
                what: "content feature".to_string(),
                expected: self.cfg.content_dim,
                actual: c.len(),
            });
        }
        if s.len() != self.cfg.style_dim {
            return Err(Error::DimMismatch {
                what: "style feature".to_string(),
                expected: self.cfg.style_dim,
                actual: s.len(),
            });
        }
        let cat = concatenate(Axis(0), &[c.view(), s.view()]).expect("1-d concat");
        Ok(match &self.bridge {
            Some(b) => b.forward(&cat),
            None => cat,
        })
    }

    /// Teacher-forced decoding: step t consumes the gold token t-1 (SOS at
    /// t=0) and emits a probability vector; output length equals |target|.
    pub fn decode_teacher_forced(
        &self,
        c: &ContentFeature,
        s: &StyleFeature,
        target: &[usize],
    ) -> Result<Vec<Array1<f64>>> {
        let (probs, _) = self.decode_train(c, s, target, 1.0, &mut ChaCha8Rng::seed_from_u64(0))?;
        Ok(probs)
    }

    /// Training-mode decode with a teacher-forcing rate: with probability
    /// (1 - rate) a step consumes the model's previous argmax instead of the
    /// gold token. At rate 1.0 no randomness is drawn.
    pub fn decode_train(
        &self,
        c: &ContentFeature,
        s: &StyleFeature,
        target: &[usize],
        teacher_forcing_rate: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<Array1<f64>>, DecoderCache)> {
        if target.is_empty() {
            return Err(Error::EmptySequence);
        }
        assert_eq!(
            target.last(),
            Some(&EOS),
            "teacher-forced target must end with EOS"
        );
        let cat = concatenate(Axis(0), &[c.view(), s.view()]).expect("1-d concat");
        let (mut h, bridge_in) = match &self.bridge {
            Some(b) => (b.forward(&cat), Some(cat)),
            None => {
                self.initial_state(c, s)?; // dimension checks
                (cat, None)
            }
        };

        let mut probs = Vec::with_capacity(target.len());
        let mut inputs = Vec::with_capacity(target.len());
        let mut steps = Vec::with_capacity(target.len());
        let mut hidden = Vec::with_capacity(target.len());
        for t in 0..target.len() {
            let input = if t == 0 {
                SOS
            } else if teacher_forcing_rate >= 1.0 || rng.gen_bool(teacher_forcing_rate) {
                target[t - 1]
            } else {
                argmax(&probs[t - 1])
            };
            let x = self.embedding.lookup(input);
            let (h_new, step) = self.decoder.forward(&x, &h);
            let p = softmax(&self.out_proj.forward(&h_new));
            h = h_new;
            inputs.push(input);
            steps.push(step);
            hidden.push(h.clone());
            probs.push(p);
        }
        Ok((
            probs,
            DecoderCache {
                inputs,
                steps,
                hidden,
                bridge_in,
            },
        ))
    }

    /// Backward through the decoder from per-step logit gradients; returns
    /// the gradients at the content and style features.
    pub fn backward_decoder(
        &mut self,
        cache: &DecoderCache,
        dlogits: &[Array1<f64>],
    ) -> (Array1<f64>, Array1<f64>) {
        assert_eq!(dlogits.len(), cache.steps.len());
        let mut dh = Array1::zeros(self.cfg.decoder_hidden_dim());
        for t in (0..cache.steps.len()).rev() {
            dh += &self.out_proj.backward(&cache.hidden[t], &dlogits[t]);
            let (dx, dh_prev) = self.decoder.backward(&cache.steps[t], &dh);
            self.embedding.backward_one(cache.inputs[t], &dx);
            dh = dh_prev;
        }
        let dcat = match (&mut self.bridge, &cache.bridge_in) {
            (Some(b), Some(cat)) => b.backward(cat, &dh),
            _ => dh,
        };
        let dc = dcat.slice(ndarray::s![..self.cfg.content_dim]).to_owned();
        let ds = dcat.slice(ndarray::s![self.cfg.content_dim..]).to_owned();
        (dc, ds)
    }

    /// Greedy argmax decoding from SOS until EOS or `max_len` tokens; the
    /// returned sequence never contains EOS. Argmax ties break to the lowest
    /// token id.
    pub fn generate(
        &self,
        c: &ContentFeature,
        s: &StyleFeature,
        max_len: usize,
    ) -> Result<Vec<usize>> {
        assert!(max_len >= 1);
        let mut h = self.initial_state(c, s)?;
        let mut out = Vec::new();
        let mut input = SOS;
        for _ in 0..max_len {
            let x = self.embedding.lookup(input);
            let (h_new, _) = self.decoder.forward(&x, &h);
            h = h_new;
            let p = softmax(&self.out_proj.forward(&h));
            let next = argmax(&p);
            if next == EOS {
                break;
            }
            out.push(next);
            input = next;
        }
        Ok(out)
    }

    /// Beam-search decoding; `beam_width` 1 reproduces [`Self::generate`].
    pub fn generate_beam(
        &self,
        c: &ContentFeature,
        s: &StyleFeature,
        max_len: usize,
        beam_width: usize,
    ) -> Result<Vec<usize>> {
        assert!(max_len >= 1 && beam_width >= 1);
        let h0 = self.initial_state(c, s)?;

        struct Hyp {
            ids: Vec<usize>,
            h: Array1<f64>,
            logp: f64,
            done: bool,
        }
        let mut beam = vec![Hyp {
            ids: Vec::new(),
            h: h0,
            logp: 0.0,
            done: false,
        }];
        for _ in 0..max_len {
            if beam.iter().all(|h| h.done) {
                break;
            }
            let mut next: Vec<Hyp> = Vec::new();
            for hyp in &beam {
                if hyp.done {
                    next.push(Hyp {
                        ids: hyp.ids.clone(),
                        h: hyp.h.clone(),
                        logp: hyp.logp,
                        done: true,
                    });
                    continue;
                }
                let input = *hyp.ids.last().unwrap_or(&SOS);
                let x = self.embedding.lookup(input);
                let (h_new, _) = self.decoder.forward(&x, &hyp.h);
                let p = softmax(&self.out_proj.forward(&h_new));
                let mut scored: Vec<(usize, f64)> = p
                    .iter()
                    .enumerate()
                    .map(|(id, &pr)| (id, pr.max(f64::MIN_POSITIVE).ln()))
                    .collect();
                scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
                for &(id, lp) in scored.iter().take(beam_width) {
                    let mut ids = hyp.ids.clone();
                    let done = id == EOS;
                    if !done {
                        ids.push(id);
                    }
                    next.push(Hyp {
                        ids,
                        h: h_new.clone(),
                        logp: hyp.logp + lp,
                        done,
                    });
                }
            }
            next.sort_by(|a, b| b.logp.partial_cmp(&a.logp).unwrap().then(a.ids.cmp(&b.ids)));
            next.truncate(beam_width);
            beam = next;
        }
        beam.sort_by(|a, b| {
            b.done
                .cmp(&a.done)
                .then(b.logp.partial_cmp(&a.logp).unwrap())
                .then(a.ids.cmp(&b.ids))
        });
        Ok(beam.into_iter().next().expect("beam never empty").ids)
    }

    /// Visits every named parameter (values and gradient accumulators).
    pub fn visit_params(&mut self, f: &mut ParamVisitor) {
        self.embedding.visit_params("embedding", f);
        self.content_encoder.visit_params("content", f);
        self.style_encoder.visit_params("style", f);
        if let Some(b) = &mut self.bridge {
            b.visit_params("bridge", f);
        }
        self.decoder.visit_params("decoder.cell", f);
        self.out_proj.visit_params("out", f);
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(&mut |_, _, _, g| g.fill(0.0));
    }

    pub fn grad_norm(&mut self) -> f64 {
        let mut sq = 0.0;
        self.visit_params(&mut |_, _, _, g| {
            sq += g.iter().map(|v| v * v).sum::<f64>();
        });
        sq.sqrt()
    }

    /// Scales all gradients so the global norm is at most `max_norm`.
    pub fn clip_grads(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            self.visit_params(&mut |_, _, _, g| {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            });
        }
        norm
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, _, v, _| n += v.len());
        n
    }
}

use rand::Rng;

/// First index of the maximum value (ties break low).
pub fn argmax(p: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}
