//! Exemplar mining: for each (source, target) pair, pick the pool sentence
//! whose POS tag sequence is closest to the target's, subject to a length
//! window and a content-overlap cap.
//!
//! Candidates for a target Y must satisfy |len(C) - len(Y)| <= 2 and
//! shared_word_count(C, Y) + 2 <= len(Y); among survivors the one with the
//! smallest tag edit distance wins, ties broken by lowest pool index.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Sentence, Triple};
use crate::error::Result;
use crate::syntax::{edit_distance, TagSequence, Tagger};

pub const LENGTH_WINDOW: usize = 2;
pub const OVERLAP_MARGIN: usize = 2;

/// Buckets pool indices by sentence length so a query only visits lengths
/// within the window.
#[derive(Debug, Clone)]
pub struct LengthIndex {
    buckets: BTreeMap<usize, Vec<usize>>,
}

impl LengthIndex {
    pub fn build(pool: &[Sentence]) -> Self {
        let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in pool.iter().enumerate() {
            buckets.entry(s.len()).or_default().push(i);
        }
        Self { buckets }
    }

    pub fn bucket(&self, len: usize) -> &[usize] {
        self.buckets.get(&len).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Pool indices whose length is within `LENGTH_WINDOW` of `len`,
    /// ascending by index.
    pub fn candidates(&self, len: usize) -> Vec<usize> {
        let lo = len.saturating_sub(LENGTH_WINDOW);
        let hi = len + LENGTH_WINDOW;
        let mut out: Vec<usize> = self
            .buckets
            .range(lo..=hi)
            .flat_map(|(_, v)| v.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn buckets(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.buckets
    }
}

/// Number of shared word types (set intersection, not occurrences).
pub fn shared_word_count(a: &Sentence, b: &Sentence) -> usize {
    let sa: HashSet<&str> = a.tokens().iter().map(|t| t.as_str()).collect();
    let sb: HashSet<&str> = b.tokens().iter().map(|t| t.as_str()).collect();
    sa.intersection(&sb).count()
}

/// Both mining filters: the length window and the overlap cap.
pub fn is_candidate(candidate: &Sentence, target: &Sentence) -> bool {
    candidate.len().abs_diff(target.len()) <= LENGTH_WINDOW
        && shared_word_count(candidate, target) + OVERLAP_MARGIN <= target.len()
}

/// Finds the pool index minimizing tag edit distance to `target_tags` among
/// surviving candidates; `exclude` removes the pair's own source. Returns the
/// winning index and its distance, or `None` when no candidate survives.
pub fn find_exemplar(
    target: &Sentence,
    target_tags: &TagSequence,
    pool: &[Sentence],
    pool_tags: &[TagSequence],
    index: &LengthIndex,
    exclude: Option<usize>,
) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in index.candidates(target.len()) {
        if Some(i) == exclude || !is_candidate(&pool[i], target) {
            continue;
        }
        let d = edit_distance(&pool_tags[i], target_tags);
        match best {
            Some((_, bd)) if d >= bd => {}
            _ => best = Some((i, d)),
        }
    }
    best
}

/// Mining statistics emitted alongside the triples.
#[derive(Debug, Clone, Serialize)]
pub struct MiningStats {
    pub total_pairs: usize,
    pub mined: usize,
    pub dropped: usize,
    /// Mean tag edit distance of the chosen exemplars.
    pub mean_edit_distance: f64,
}

/// Mines one triple per (X, Y) pair; pairs with no surviving candidate are
/// dropped and counted. Output order follows input order and is independent
/// of the worker count.
pub fn mine_corpus(
    pairs: &[(Sentence, Sentence)],
    pool: &[Sentence],
    tagger: &dyn Tagger,
) -> Result<(Vec<Triple>, MiningStats)> {
    let pool_tags: Vec<TagSequence> = pool
        .iter()
        .map(|s| tagger.tag(s))
        .collect::<Result<_>>()?;
    let target_tags: Vec<TagSequence> = pairs
        .iter()
        .map(|(_, y)| tagger.tag(y))
        .collect::<Result<_>>()?;
    let index = LengthIndex::build(pool);

    let found: Vec<Option<(usize, usize)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (_, y))| {
            // A pair's own source is excluded so the exemplar can never leak
            // the pair's content verbatim.
            let exclude = if i < pool.len() { Some(i) } else { None };
            find_exemplar(y, &target_tags[i], pool, &pool_tags, &index, exclude)
        })
        .collect();

    let mut triples = Vec::new();
    let mut dist_sum = 0usize;
    for (pair, hit) in pairs.iter().zip(&found) {
        if let Some((idx, d)) = hit {
            triples.push(Triple {
                source: pair.0.clone(),
                target: pair.1.clone(),
                exemplar: pool[*idx].clone(),
            });
            dist_sum += d;
        }
    }
    let dropped = pairs.len() - triples.len();
    if dropped > 0 {
        log::info!("mine_corpus: dropped {dropped} pair(s) with no surviving candidate");
    }
    let stats = MiningStats {
        total_pairs: pairs.len(),
        mined: triples.len(),
        dropped,
        mean_edit_distance: if triples.is_empty() {
            0.0
        } else {
            dist_sum as f64 / triples.len() as f64
        },
    };
    Ok((triples, stats))
}

#[cfg(test)]
pub(crate) mod brute {
    //! Index-free reference scan, kept for equivalence tests.
    use super::*;

    pub fn find_exemplar_scan(
        target: &Sentence,
        target_tags: &TagSequence,
        pool: &[Sentence],
        pool_tags: &[TagSequence],
        exclude: Option<usize>,
    ) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for (i, c) in pool.iter().enumerate() {
            if Some(i) == exclude || !is_candidate(c, target) {
                continue;
            }
            let d = edit_distance(&pool_tags[i], target_tags);
            match best {
                Some((_, bd)) if d >= bd => {}
                _ => best = Some((i, d)),
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use crate::syntax::SidecarTagger;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sent(text: &str) -> Sentence {
        tokenize(text).unwrap()
    }

    #[test]
    fn index_buckets_cover_pool() {
        let pool = vec![sent("a b c"), sent("d e f"), sent("g h i j k")];
        let idx = LengthIndex::build(&pool);
        assert_eq!(idx.bucket(3), &[0, 1]);
        assert_eq!(idx.bucket(5), &[2]);
        let covered: usize = idx.buckets().values().map(|v| v.len()).sum();
        assert_eq!(covered, 3);
    }

    #[test]
    fn index_singleton() {
        let pool = vec![sent("one two")];
        let idx = LengthIndex::build(&pool);
        assert_eq!(idx.bucket(2), &[0]);
    }

    #[test]
    fn index_window_visits_only_nearby_lengths() {
        let pool: Vec<Sentence> = (1..=7)
            .map(|n| sent(&vec!["w"; n].join(" ")))
            .collect();
        let idx = LengthIndex::build(&pool);
        let cands = idx.candidates(4);
        let lens: Vec<usize> = cands.iter().map(|&i| pool[i].len()).collect();
        assert_eq!(lens, vec![2, 3, 4, 5, 6]);
    }

    #[test]
    fn shared_words_count_types() {
        assert_eq!(shared_word_count(&sent("a b a"), &sent("a c")), 1);
        assert_eq!(shared_word_count(&sent("a b"), &sent("c d")), 0);
        assert_eq!(shared_word_count(&sent("a b c"), &sent("a b c")), 3);
    }

    #[test]
    fn candidate_filters() {
        // length window violated
        assert!(!is_candidate(&sent("a b c d e f g h"), &sent("p q r s t")));
        // near-copy rejected: shared = 5, 5 + 2 > 5
        let y = sent("a b c d e");
        assert!(!is_candidate(&y, &y));
        // passes both: |6-6| <= 2, shared 3 + 2 <= 6
        assert!(is_candidate(&sent("a b c x y z"), &sent("a b c u v w")));
    }

    fn tagged(pool: &[Sentence], tags: &[&[&str]]) -> (SidecarTagger, Vec<TagSequence>) {
        let seqs: Vec<TagSequence> = tags.iter().map(|t| TagSequence::from_strs(t)).collect();
        let entries = pool.iter().cloned().zip(seqs.iter().cloned()).collect();
        (SidecarTagger::from_entries(entries).unwrap(), seqs)
    }

    #[test]
    fn zero_distance_winner() {
        let pool = vec![sent("p q r s"), sent("k l m n")];
        let y = sent("a b c d");
        let (_, pool_tags) = tagged(
            &pool,
            &[&["DT", "NN", "VB", "."], &["WP", "MD", "VB", "."]],
        );
        let y_tags = TagSequence::from_strs(&["WP", "MD", "VB", "."]);
        let idx = LengthIndex::build(&pool);
        let hit = find_exemplar(&y, &y_tags, &pool, &pool_tags, &idx, None);
        assert_eq!(hit, Some((1, 0)));
    }

    #[test]
    fn empty_candidate_set_is_none() {
        let pool = vec![sent("a b c d e f g h i")];
        let y = sent("x y");
        let (_, pool_tags) = tagged(&pool, &[&["A"; 9]]);
        let y_tags = TagSequence::from_strs(&["A", "A"]);
        let idx = LengthIndex::build(&pool);
        assert_eq!(
            find_exemplar(&y, &y_tags, &pool, &pool_tags, &idx, None),
            None
        );
    }

    fn random_case(
        rng: &mut ChaCha8Rng,
        pool_size: usize,
    ) -> (Vec<Sentence>, Vec<TagSequence>, Sentence, TagSequence) {
        let words = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let tags = ["T1", "T2", "T3"];
        let make = |rng: &mut ChaCha8Rng| {
            let len = rng.gen_range(1..=8);
            let toks: Vec<String> = (0..len)
                .map(|_| words[rng.gen_range(0..words.len())].to_string())
                .collect();
            let tg: Vec<String> = (0..len)
                .map(|_| tags[rng.gen_range(0..tags.len())].to_string())
                .collect();
            (Sentence::new(toks).unwrap(), TagSequence::new(tg))
        };
        let mut pool = Vec::new();
        let mut pool_tags = Vec::new();
        for _ in 0..pool_size {
            let (s, t) = make(rng);
            pool.push(s);
            pool_tags.push(t);
        }
        let (y, yt) = make(rng);
        (pool, pool_tags, y, yt)
    }

    #[test]
    fn indexed_equals_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (pool, pool_tags, y, yt) = random_case(&mut rng, 30);
            let idx = LengthIndex::build(&pool);
            let a = find_exemplar(&y, &yt, &pool, &pool_tags, &idx, Some(3));
            let b = brute::find_exemplar_scan(&y, &yt, &pool, &pool_tags, Some(3));
            assert_eq!(a, b);
        }
    }

    #[test]
    fn mine_corpus_drops_and_counts() {
        // Two pairs: one has a valid exemplar in the pool, one is too long
        // for every candidate.
        let pairs = vec![
            (sent("u v w x"), sent("a b c d")),
            (sent("long long2 long3 long4 long5 long6 long7 long8 x y z q"), sent("p q r s t u v w x y z1 z2")),
        ];
        let pool: Vec<Sentence> = pairs.iter().map(|(x, _)| x.clone()).collect();
        let mut entries: Vec<(Sentence, TagSequence)> = vec![
            (pool[0].clone(), TagSequence::from_strs(&["A", "B", "C", "D"])),
            (pool[1].clone(), TagSequence::from_strs(&["A"; 12])),
            (pairs[0].1.clone(), TagSequence::from_strs(&["A", "B", "C", "D"])),
            (pairs[1].1.clone(), TagSequence::from_strs(&["B"; 12])),
        ];
        entries.dedup_by(|a, b| a.0 == b.0);
        let tagger = SidecarTagger::from_entries(entries).unwrap();
        let (triples, stats) = mine_corpus(&pairs, &pool, &tagger).unwrap();
        // pair 0: own source excluded, pool[1] fails the length window -> dropped;
        // pair 1: pool[0] fails the window, own source excluded -> dropped... both drop.
        assert_eq!(triples.len(), 0);
        assert_eq!(stats.dropped, 2);

        // Add a third pool sentence that matches pair 0's target tags.
        let pairs2 = vec![pairs[0].clone()];
        let pool2 = vec![pool[0].clone(), sent("m n o p")];
        let tagger2 = SidecarTagger::from_entries(vec![
            (pool2[0].clone(), TagSequence::from_strs(&["A", "B", "C", "D"])),
            (pool2[1].clone(), TagSequence::from_strs(&["A", "B", "C", "D"])),
            (pairs2[0].1.clone(), TagSequence::from_strs(&["A", "B", "C", "D"])),
        ])
        .unwrap();
        let (triples2, stats2) = mine_corpus(&pairs2, &pool2, &tagger2).unwrap();
        assert_eq!(triples2.len(), 1);
        assert_eq!(stats2.dropped, 0);
        assert_eq!(triples2[0].exemplar, pool2[1]);
        assert!((stats2.mean_edit_distance - 0.0).abs() < 1e-12);
    }

    #[test]
    fn mined_exemplars_satisfy_filters() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (pool, pool_tags, _, _) = random_case(&mut rng, 60);
        let pairs: Vec<(Sentence, Sentence)> = pool
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), pool[(i + 7) % pool.len()].clone()))
            .collect();
        let mut entries: Vec<(Sentence, TagSequence)> =
            pool.iter().cloned().zip(pool_tags.iter().cloned()).collect();
        entries.sort_by(|a, b| a.0.text().cmp(&b.0.text()));
        entries.dedup_by(|a, b| a.0 == b.0);
        let tagger = SidecarTagger::from_entries(entries).unwrap();
        let (triples, _) = mine_corpus(&pairs, &pool, &tagger).unwrap();
        for t in &triples {
            assert!(is_candidate(&t.exemplar, &t.target));
        }
    }
}
