//! Automatic metrics: corpus BLEU-4, ROUGE-1/2/L, a simplified METEOR
//! (exact + stem matching, no synonym resources), POS-tag edit distances
//! against exemplar and reference, content matching accuracy, and the
//! style-embedding retrieval diagnostic.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{decode, encode, Sentence, Triple, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelState;
use crate::syntax::{edit_distance, TagSequence, Tagger};

/// Smoothing constant replacing zero clipped n-gram counts in BLEU.
pub const BLEU_EPS: f64 = 1e-9;
const BLEU_MAX_ORDER: usize = 4;

/// Per-run metric bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    /// Corpus BLEU-4, 0..100.
    pub bleu: f64,
    /// Mean per-sentence F1, 0..1.
    pub rouge1: f64,
    pub rouge2: f64,
    pub rouge_l: f64,
    /// Simplified METEOR, 0..1.
    pub meteor: f64,
    /// Mean tag edit distance generation vs exemplar.
    pub ed_e: f64,
    /// Mean tag edit distance generation vs reference.
    pub ed_r: f64,
    /// Content matching accuracy, 0..1.
    pub cma: f64,
    pub count: usize,
    /// METEOR variant marker: exact+stem, no synonym stage.
    pub meteor_variant: String,
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "bleu,rouge1,rouge2,rouge_l,meteor,ed_e,ed_r,cma,count"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.bleu,
            self.rouge1,
            self.rouge2,
            self.rouge_l,
            self.meteor,
            self.ed_e,
            self.ed_r,
            self.cma,
            self.count
        )
    }

    pub fn in_declared_ranges(&self) -> bool {
        (0.0..=100.0).contains(&self.bleu)
            && [self.rouge1, self.rouge2, self.rouge_l, self.meteor, self.cma]
                .iter()
                .all(|v| (0.0..=1.0).contains(v))
            && self.ed_e >= 0.0
            && self.ed_r >= 0.0
    }
}

fn check_aligned<T, U>(cands: &[T], refs: &[U]) -> Result<()> {
    if cands.len() != refs.len() {
        return Err(Error::LengthMismatch {
            what: "candidates vs references".to_string(),
            left: cands.len(),
            right: refs.len(),
        });
    }
    if cands.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(())
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus-level BLEU-4 with brevity penalty, single reference per candidate,
/// add-epsilon smoothing for zero clipped counts. Orders with no candidate
/// n-grams corpus-wide are skipped. Scale 0..100.
pub fn bleu(candidates: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    check_aligned(candidates, references)?;
    let mut clipped = [0usize; BLEU_MAX_ORDER];
    let mut totals = [0usize; BLEU_MAX_ORDER];
    let mut cand_len = 0usize;
    let mut ref_len = 0usize;
    for (cand, reference) in candidates.iter().zip(references) {
        cand_len += cand.len();
        ref_len += reference.len();
        for n in 1..=BLEU_MAX_ORDER {
            let c_counts = ngram_counts(cand, n);
            let r_counts = ngram_counts(reference, n);
            for (gram, &c) in &c_counts {
                totals[n - 1] += c;
                let r = r_counts.get(gram).copied().unwrap_or(0);
                clipped[n - 1] += c.min(r);
            }
        }
    }
    if cand_len == 0 {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut used = 0usize;
    for n in 0..BLEU_MAX_ORDER {
        if totals[n] == 0 {
            continue;
        }
        let p = if clipped[n] == 0 {
            BLEU_EPS / totals[n] as f64
        } else {
            clipped[n] as f64 / totals[n] as f64
        };
        log_sum += p.ln();
        used += 1;
    }
    if used == 0 {
        return Ok(0.0);
    }
    let bp = if cand_len < ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    Ok(100.0 * bp * (log_sum / used as f64).exp())
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn rouge_n_sentence(cand: &[String], reference: &[String], n: usize) -> f64 {
    let c_counts = ngram_counts(cand, n);
    let r_counts = ngram_counts(reference, n);
    let c_total: usize = c_counts.values().sum();
    let r_total: usize = r_counts.values().sum();
    if c_total == 0 || r_total == 0 {
        return 0.0;
    }
    let overlap: usize = c_counts
        .iter()
        .map(|(g, &c)| c.min(r_counts.get(g).copied().unwrap_or(0)))
        .sum();
    f1(overlap as f64 / c_total as f64, overlap as f64 / r_total as f64)
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            cur[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn rouge_l_sentence(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let l = lcs_len(cand, reference) as f64;
    f1(l / cand.len() as f64, l / reference.len() as f64)
}

/// Mean per-sentence F1 of unigram overlap, bigram overlap and LCS.
pub fn rouge(candidates: &[Vec<String>], references: &[Vec<String>]) -> Result<(f64, f64, f64)> {
    check_aligned(candidates, references)?;
    let m = candidates.len() as f64;
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    let mut rl = 0.0;
    for (c, r) in candidates.iter().zip(references) {
        r1 += rouge_n_sentence(c, r, 1);
        r2 += rouge_n_sentence(c, r, 2);
        rl += rouge_l_sentence(c, r);
    }
    Ok((r1 / m, r2 / m, rl / m))
}

/// Light suffix stemmer used by the METEOR stem-match stage.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    let n = w.len();
    let undouble = |s: &str| -> String {
        let bytes = s.as_bytes();
        if s.len() >= 2
            && bytes[s.len() - 1] == bytes[s.len() - 2]
            && !matches!(bytes[s.len() - 1], b'a' | b'e' | b'i' | b'o' | b'u' | b's')
        {
            s[..s.len() - 1].to_string()
        } else {
            s.to_string()
        }
    };
    if n > 4 && w.ends_with("ies") {
        return format!("{}y", &w[..n - 3]);
    }
    if n > 4 && w.ends_with("sses") {
        return w[..n - 2].to_string();
    }
    if n > 5 && w.ends_with("ing") {
        return undouble(&w[..n - 3]);
    }
    if n > 4 && w.ends_with("ed") {
        return undouble(&w[..n - 2]);
    }
    if n > 4 && w.ends_with("ly") {
        return w[..n - 2].to_string();
    }
    if n > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return w[..n - 1].to_string();
    }
    w
}

/// Greedy two-stage unigram alignment: exact matches first, then stems.
/// Returns (cand_pos, ref_pos) pairs sorted by candidate position.
fn meteor_alignment(cand: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; reference.len()];
    let mut matches = Vec::new();
    let mut cand_used = vec![false; cand.len()];
    for (ci, ct) in cand.iter().enumerate() {
        for (ri, rt) in reference.iter().enumerate() {
            if !ref_used[ri] && ct == rt {
                ref_used[ri] = true;
                cand_used[ci] = true;
                matches.push((ci, ri));
                break;
            }
        }
    }
    for (ci, ct) in cand.iter().enumerate() {
        if cand_used[ci] {
            continue;
        }
        let cs = stem(ct);
        for (ri, rt) in reference.iter().enumerate() {
            if !ref_used[ri] && cs == stem(rt) {
                ref_used[ri] = true;
                matches.push((ci, ri));
                break;
            }
        }
    }
    matches.sort_unstable();
    matches
}

fn meteor_sentence(cand: &[String], reference: &[String]) -> f64 {
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let matches = meteor_alignment(cand, reference);
    let m = matches.len() as f64;
    if matches.is_empty() {
        return 0.0;
    }
    let p = m / cand.len() as f64;
    let r = m / reference.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    let mut chunks = 1usize;
    for w in matches.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    f_mean * (1.0 - penalty)
}

/// Simplified METEOR: exact then stemmed unigram alignment, harmonic mean
/// weighted toward recall, cubic fragmentation penalty; corpus mean.
pub fn meteor_simplified(candidates: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    check_aligned(candidates, references)?;
    let sum: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| meteor_sentence(c, r))
        .sum();
    Ok(sum / candidates.len() as f64)
}

fn tags_of(tokens: &[String], tagger: &dyn Tagger) -> Result<TagSequence> {
    if tokens.is_empty() {
        return Ok(TagSequence::empty());
    }
    let s = Sentence::new(tokens.to_vec())?;
    tagger.tag(&s)
}

/// Mean POS-tag edit distance of each generation against its exemplar (ED-E)
/// and its reference (ED-R).
pub fn ed_metrics(
    generated: &[Vec<String>],
    exemplars: &[Sentence],
    references: &[Sentence],
    tagger: &dyn Tagger,
) -> Result<(f64, f64)> {
    check_aligned(generated, exemplars)?;
    check_aligned(generated, references)?;
    let m = generated.len() as f64;
    let mut ed_e = 0.0;
    let mut ed_r = 0.0;
    for ((g, e), r) in generated.iter().zip(exemplars).zip(references) {
        let gt = tags_of(g, tagger)?;
        ed_e += edit_distance(&gt, &tagger.tag(e)?) as f64;
        ed_r += edit_distance(&gt, &tagger.tag(r)?) as f64;
    }
    Ok((ed_e / m, ed_r / m))
}

/// One row of the CMA similarity matrix that failed to match its diagonal.
#[derive(Debug, Clone, Serialize)]
pub struct CmaMismatch {
    pub row: usize,
    pub argmax: usize,
    /// How far the winning off-diagonal score beat the diagonal.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CmaResult {
    pub accuracy: f64,
    pub mismatches: Vec<CmaMismatch>,
}

/// Content matching accuracy: the fraction of rows of S = A B^T whose argmax
/// is the diagonal. Ties break to the lowest column, so a tie off-diagonal at
/// a column below i counts as a miss. Rows are processed in blocks of
/// `block_rows`; the result is identical for any block size.
pub fn content_matching_accuracy_detailed(
    a: &Array2<f64>,
    b: &Array2<f64>,
    block_rows: usize,
) -> Result<CmaResult> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            what: "CMA feature blocks".to_string(),
            expected: a.ncols(),
            actual: b.ncols(),
        });
    }
    let m = a.nrows();
    if m == 0 {
        return Err(Error::EmptyCorpus);
    }
    let block = block_rows.max(1);
    let mut hits = 0usize;
    let mut mismatches = Vec::new();
    let mut scores = vec![0.0f64; m];
    for start in (0..m).step_by(block) {
        let end = (start + block).min(m);
        for i in start..end {
            let ai = a.row(i);
            for (j, s) in scores.iter_mut().enumerate() {
                *s = ai.dot(&b.row(j));
            }
            let mut arg = 0usize;
            for (j, &s) in scores.iter().enumerate() {
                if s > scores[arg] {
                    arg = j;
                }
            }
            if arg == i {
                hits += 1;
            } else {
                mismatches.push(CmaMismatch {
                    row: i,
                    argmax: arg,
                    margin: scores[arg] - scores[i],
                });
            }
        }
    }
    mismatches.sort_by(|x, y| y.margin.partial_cmp(&x.margin).unwrap().then(x.row.cmp(&y.row)));
    Ok(CmaResult {
        accuracy: hits as f64 / m as f64,
        mismatches,
    })
}

pub fn content_matching_accuracy(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    Ok(content_matching_accuracy_detailed(a, b, a.nrows().max(1))?.accuracy)
}

fn maybe_normalize(v: &Array1<f64>, normalize: bool) -> Array1<f64> {
    if !normalize {
        return v.clone();
    }
    let n = v.dot(v).sqrt().max(1e-12);
    v / n
}

/// Ranks the pool by style-feature dot product with the query, descending,
/// ties to the lowest index; returns up to `top_k` (index, score) pairs.
/// `normalize` should match the training setting.
pub fn style_retrieval(
    query: &Sentence,
    pool: &[Sentence],
    model: &ModelState,
    vocab: &Vocabulary,
    top_k: usize,
    normalize: bool,
) -> Result<Vec<(usize, f64)>> {
    let q = maybe_normalize(&model.encode_style(&encode(query, vocab, false))?, normalize);
    let scores: Vec<f64> = pool
        .par_iter()
        .map(|s| {
            let f = maybe_normalize(&model.encode_style(&encode(s, vocab, false))?, normalize);
            Ok(q.dot(&f))
        })
        .collect::<Result<_>>()?;
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(top_k);
    Ok(ranked)
}

/// Greedy generations for every (source, exemplar) in the set, in input order.
pub fn generate_all(
    model: &ModelState,
    triples: &[Triple],
    vocab: &Vocabulary,
) -> Result<Vec<Vec<String>>> {
    triples
        .par_iter()
        .map(|t| {
            let c = model.encode_content(&encode(&t.source, vocab, false))?;
            let s = model.encode_style(&encode(&t.exemplar, vocab, false))?;
            let ids = model.generate(&c, &s, model.cfg.max_len)?;
            Ok(decode(&ids, vocab))
        })
        .collect()
}

/// Assembles the lexical/syntactic half of the report from pre-computed
/// generations (the CMA field is filled by [`evaluate_run`]).
pub fn report_from_generations(
    generations: &[Vec<String>],
    triples: &[Triple],
    tagger: &dyn Tagger,
) -> Result<EvalReport> {
    check_aligned(generations, triples)?;
    let refs: Vec<Vec<String>> = triples.iter().map(|t| t.target.tokens().to_vec()).collect();
    let exemplars: Vec<Sentence> = triples.iter().map(|t| t.exemplar.clone()).collect();
    let ref_sents: Vec<Sentence> = triples.iter().map(|t| t.target.clone()).collect();
    let bleu_score = bleu(generations, &refs)?;
    let (rouge1, rouge2, rouge_l) = rouge(generations, &refs)?;
    let meteor = meteor_simplified(generations, &refs)?;
    let (ed_e, ed_r) = ed_metrics(generations, &exemplars, &ref_sents, tagger)?;
    Ok(EvalReport {
        bleu: bleu_score,
        rouge1,
        rouge2,
        rouge_l,
        meteor,
        ed_e,
        ed_r,
        cma: 0.0,
        count: generations.len(),
        meteor_variant: "exact+stem".to_string(),
    })
}

/// Full evaluation: generate a paraphrase per (X, Z), score against Y, and
/// compute CMA from the content features of the test sources and targets.
pub fn evaluate_run(
    model: &ModelState,
    triples: &[Triple],
    vocab: &Vocabulary,
    tagger: &dyn Tagger,
) -> Result<EvalReport> {
    if triples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let generations = generate_all(model, triples, vocab)?;
    let mut report = report_from_generations(&generations, triples, tagger)?;
    report.cma = cma_over_triples(model, triples, vocab)?.accuracy;
    Ok(report)
}

/// CMA over a test set: row i of A is the content feature of source i, row i
/// of B the content feature of target i.
pub fn cma_over_triples(
    model: &ModelState,
    triples: &[Triple],
    vocab: &Vocabulary,
) -> Result<CmaResult> {
    let feats: Vec<(Array1<f64>, Array1<f64>)> = triples
        .par_iter()
        .map(|t| {
            let a = model.encode_content(&encode(&t.source, vocab, false))?;
            let b = model.encode_content(&encode(&t.target, vocab, false))?;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let k = feats[0].0.len();
    let mut a = Array2::zeros((feats.len(), k));
    let mut b = Array2::zeros((feats.len(), k));
    for (i, (fa, fb)) in feats.iter().enumerate() {
        a.row_mut(i).assign(fa);
        b.row_mut(i).assign(fb);
    }
    content_matching_accuracy_detailed(&a, &b, 128)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toks(text: &str) -> Vec<String> {
        text.split_whitespace().map(|t| t.to_string()).collect()
    }

    #[test]
    fn bleu_identity_is_100() {
        let c = vec![toks("the cat sat on the mat"), toks("a dog runs")];
        let score = bleu(&c, &c).unwrap();
        assert!((score - 100.0).abs() < 1e-9);
    }

    #[test]
    fn bleu_disjoint_is_near_zero() {
        let c = vec![toks("aa bb cc dd")];
        let r = vec![toks("xx yy zz ww")];
        let score = bleu(&c, &r).unwrap();
        assert!(score < 0.01, "{score}");
    }

    #[test]
    fn bleu_hand_computed_fixture() {
        let c = vec![toks("the cat sat")];
        let r = vec![toks("the cat sat down")];
        let score = bleu(&c, &r).unwrap();
        assert!((score - 71.65313105737893).abs() < 0.01, "{score}");
    }

    #[test]
    fn bleu_empty_corpus_errors() {
        assert!(matches!(bleu(&[], &[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn bleu_empty_candidates_score_zero() {
        let c = vec![Vec::new()];
        let r = vec![toks("a b")];
        assert_eq!(bleu(&c, &r).unwrap(), 0.0);
    }

    #[test]
    fn bleu_is_corpus_order_invariant() {
        let c1 = vec![toks("a b c"), toks("d e f g")];
        let r1 = vec![toks("a b x"), toks("d e f h")];
        let c2 = vec![c1[1].clone(), c1[0].clone()];
        let r2 = vec![r1[1].clone(), r1[0].clone()];
        assert!((bleu(&c1, &r1).unwrap() - bleu(&c2, &r2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rouge_identity_and_disjoint() {
        let c = vec![toks("a b c")];
        assert_eq!(rouge(&c, &c).unwrap(), (1.0, 1.0, 1.0));
        let r = vec![toks("x y z")];
        assert_eq!(rouge(&c, &r).unwrap(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge_hand_computed_fixture() {
        let c = vec![toks("a b c")];
        let r = vec![toks("a c")];
        let (r1, _, rl) = rouge(&c, &r).unwrap();
        assert!((r1 - 0.8).abs() < 1e-12);
        assert!((rl - 0.8).abs() < 1e-12);
    }

    #[test]
    fn meteor_identical_three_tokens() {
        let c = vec![toks("a b c")];
        let score = meteor_simplified(&c, &c).unwrap();
        assert!((score - 0.9814814814814815).abs() < 1e-9, "{score}");
    }

    #[test]
    fn meteor_no_match_is_zero() {
        let c = vec![toks("a b")];
        let r = vec![toks("x y")];
        assert_eq!(meteor_simplified(&c, &r).unwrap(), 0.0);
    }

    #[test]
    fn meteor_stem_stage_matches_inflections() {
        let c = vec![toks("runs")];
        let r = vec![toks("running")];
        let score = meteor_simplified(&c, &r).unwrap();
        assert!(score > 0.0, "stem stage should align runs/running");
    }

    #[test]
    fn stem_examples() {
        assert_eq!(stem("runs"), "run");
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("walked"), "walk");
        assert_eq!(stem("studies"), "study");
        assert_eq!(stem("quickly"), "quick");
        assert_eq!(stem("chess"), "chess");
    }

    #[test]
    fn cma_fixtures() {
        // identity-dominant: orthonormal rows
        let a = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(content_matching_accuracy(&a, &a).unwrap(), 1.0);
        // anti-diagonal
        let b = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(content_matching_accuracy(&a, &b).unwrap(), 0.0);
        // explicit 3x3 score matrix via A = S, B = I
        let s = array![[0.9, 0.1, 0.0], [0.2, 0.1, 0.7], [0.0, 0.0, 0.5]];
        let eye = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let acc = content_matching_accuracy(&s, &eye).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn cma_row_scaling_invariance() {
        let a = array![[0.9, 0.1, 0.0], [0.2, 0.1, 0.7], [0.3, 0.3, 0.5]];
        let b = array![[1.0, 0.2, 0.1], [0.0, 1.0, 0.3], [0.2, 0.0, 1.0]];
        let base = content_matching_accuracy(&a, &b).unwrap();
        let mut scaled = a.clone();
        for (i, f) in [3.0, 0.25, 10.0].iter().enumerate() {
            let mut row = scaled.row_mut(i);
            row *= *f;
        }
        assert_eq!(content_matching_accuracy(&scaled, &b).unwrap(), base);
    }

    #[test]
    fn cma_blockwise_matches_full_bitwise() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let a = Array2::from_shape_fn((97, 8), |_| rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_fn((97, 8), |_| rng.gen_range(-1.0..1.0));
        let full = content_matching_accuracy_detailed(&a, &b, 97).unwrap();
        for block in [1, 7, 32, 64] {
            let blocked = content_matching_accuracy_detailed(&a, &b, block).unwrap();
            assert_eq!(blocked.accuracy.to_bits(), full.accuracy.to_bits());
            assert_eq!(blocked.mismatches.len(), full.mismatches.len());
        }
    }

    #[test]
    fn cma_tie_breaks_to_lowest_column() {
        // Row 1 ties between columns 0 and 1; the lower index wins, so the
        // diagonal (column 1) loses.
        let a = array![[1.0, 0.0], [1.0, 1.0]];
        let b = array![[1.0, 0.0], [0.0, 1.0]];
        let res = content_matching_accuracy_detailed(&a, &b, 2).unwrap();
        assert_eq!(res.accuracy, 0.5);
        assert_eq!(res.mismatches[0].row, 1);
        assert_eq!(res.mismatches[0].argmax, 0);
    }
}
