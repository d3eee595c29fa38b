//! POS tag sequences and the edit distance over them.
//!
//! Taggers are pluggable: [`PerceptronTagger`] is a self-contained averaged
//! perceptron with an embedded pretrained model, and [`SidecarTagger`] serves
//! pre-computed tags from a file aligned by line number with the corpus file.

mod perceptron;

pub use perceptron::PerceptronTagger;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::error::{Error, Result};

/// Penn-Treebank-style tag sequence, one tag per token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagSequence {
    tags: Vec<String>,
}

impl TagSequence {
    pub fn new(tags: Vec<String>) -> Self {
        Self { tags }
    }

    pub fn from_strs(tags: &[&str]) -> Self {
        Self {
            tags: tags.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn empty() -> Self {
        Self { tags: Vec::new() }
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// A part-of-speech tagger. Implementations must be deterministic.
pub trait Tagger: Send + Sync {
    /// Tags a sentence, one tag per token.
    fn tag(&self, sentence: &Sentence) -> Result<TagSequence>;
}

/// Levenshtein distance with unit insert/delete/substitute costs over
/// exact-matched tag symbols. O(|a| * |b|) time, O(min) space.
pub fn edit_distance(a: &TagSequence, b: &TagSequence) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let n = short.len();
    if n == 0 {
        return long.len();
    }
    let mut row: Vec<usize> = (0..=n).collect();
    for (j, lt) in long.tags().iter().enumerate() {
        let mut diag = row[0];
        row[0] = j + 1;
        for (i, st) in short.tags().iter().enumerate() {
            let above = row[i + 1];
            let cost = if st == lt { diag } else { diag + 1 };
            row[i + 1] = cost.min(above + 1).min(row[i] + 1);
            diag = above;
        }
    }
    row[n]
}

/// Serves pre-computed tags keyed by the exact sentence, loaded from a
/// sidecar file aligned line-by-line with its corpus file.
///
/// Sidecar format: one line per corpus line; a line holds one space-separated
/// tag sequence per sentence column, columns separated by tabs (a plain
/// one-sentence-per-line corpus has a single column).
pub struct SidecarTagger {
    by_sentence: HashMap<Sentence, TagSequence>,
}

impl SidecarTagger {
    /// Builds from parallel (sentence, tags) entries; errors on length mismatch.
    pub fn from_entries(entries: Vec<(Sentence, TagSequence)>) -> Result<Self> {
        let mut by_sentence = HashMap::new();
        for (s, t) in entries {
            if s.len() != t.len() {
                return Err(Error::LengthMismatch {
                    what: format!("tags for \"{s}\""),
                    left: s.len(),
                    right: t.len(),
                });
            }
            by_sentence.insert(s, t);
        }
        Ok(Self { by_sentence })
    }

    /// Loads a sidecar file whose line i tags the sentences of corpus line i.
    /// `sentences_per_line[i]` are the (already truncated) sentences of that line.
    pub fn load(path: &Path, sentences_per_line: &[Vec<Sentence>]) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut entries = Vec::new();
        let mut lines = reader.lines();
        for (idx, sents) in sentences_per_line.iter().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    msg: "sidecar file has fewer lines than corpus".to_string(),
                })??;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < sents.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!(
                        "sidecar line has {} tag column(s), corpus line has {} sentence(s)",
                        cols.len(),
                        sents.len()
                    ),
                });
            }
            for (s, col) in sents.iter().zip(cols.iter()) {
                let tags: Vec<String> = col.split_whitespace().map(|t| t.to_string()).collect();
                // Sentences may have been truncated after the sidecar was produced.
                let tags = if tags.len() > s.len() {
                    tags[..s.len()].to_vec()
                } else {
                    tags
                };
                entries.push((s.clone(), TagSequence::new(tags)));
            }
        }
        Self::from_entries(entries)
    }
}

impl Tagger for SidecarTagger {
    fn tag(&self, sentence: &Sentence) -> Result<TagSequence> {
        self.by_sentence.get(sentence).cloned().ok_or_else(|| {
            Error::TaggerUnavailable(format!("no sidecar tags for \"{sentence}\""))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn ts(tags: &[&str]) -> TagSequence {
        TagSequence::from_strs(tags)
    }

    /// Plain recursive definition, used as an oracle for the DP.
    fn edit_distance_recursive(a: &[&str], b: &[&str]) -> usize {
        match (a.split_first(), b.split_first()) {
            (None, _) => b.len(),
            (_, None) => a.len(),
            (Some((ah, at)), Some((bh, bt))) => {
                if ah == bh {
                    edit_distance_recursive(at, bt)
                } else {
                    let sub = edit_distance_recursive(at, bt);
                    let del = edit_distance_recursive(at, b);
                    let ins = edit_distance_recursive(a, bt);
                    1 + sub.min(del).min(ins)
                }
            }
        }
    }

    #[test]
    fn identical_sequences_are_distance_zero() {
        let a = ts(&["DT", "NN", "VBZ"]);
        assert_eq!(edit_distance(&a, &a), 0);
    }

    #[test]
    fn deletions_only() {
        assert_eq!(edit_distance(&ts(&["DT", "NN"]), &TagSequence::empty()), 2);
        assert_eq!(edit_distance(&TagSequence::empty(), &ts(&["DT", "NN"])), 2);
    }

    #[test]
    fn single_deletion_case() {
        let a = ts(&["NN", "VB", "DT"]);
        let b = ts(&["NN", "DT"]);
        assert_eq!(
            edit_distance_recursive(
                &a.tags().iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                &b.tags().iter().map(|s| s.as_str()).collect::<Vec<_>>()
            ),
            1
        );
        assert_eq!(edit_distance(&a, &b), 1);
    }

    #[test]
    fn dp_matches_recursive_oracle_small() {
        let symbols = ["A", "B", "C"];
        let mut seqs: Vec<Vec<&str>> = vec![vec![]];
        for len in 1..=4 {
            let mut next = Vec::new();
            for s in seqs.iter().filter(|s| s.len() == len - 1) {
                for sym in &symbols {
                    let mut t = s.clone();
                    t.push(sym);
                    next.push(t);
                }
            }
            seqs.extend(next);
        }
        for a in &seqs {
            for b in &seqs {
                let fast = edit_distance(
                    &TagSequence::new(a.iter().map(|s| s.to_string()).collect()),
                    &TagSequence::new(b.iter().map(|s| s.to_string()).collect()),
                );
                assert_eq!(fast, edit_distance_recursive(a, b), "a={a:?} b={b:?}");
            }
        }
    }

    fn tag_seq_strategy() -> impl Strategy<Value = TagSequence> {
        proptest::collection::vec(prop_oneof!["DT", "NN", "VB", "JJ", "IN"], 0..=10)
            .prop_map(|v| TagSequence::new(v.into_iter().map(String::from).collect()))
    }

    proptest! {
        #[test]
        fn metric_properties(a in tag_seq_strategy(), b in tag_seq_strategy(), c in tag_seq_strategy()) {
            let dab = edit_distance(&a, &b);
            let dba = edit_distance(&b, &a);
            prop_assert_eq!(dab, dba);
            prop_assert_eq!(edit_distance(&a, &a), 0);
            if dab == 0 {
                prop_assert_eq!(a.clone(), b.clone());
            }
            let dac = edit_distance(&a, &c);
            let dcb = edit_distance(&c, &b);
            prop_assert!(dab <= dac + dcb);
            let lo = a.len().abs_diff(b.len());
            let hi = a.len().max(b.len());
            prop_assert!(dab >= lo && dab <= hi);
        }
    }

    #[test]
    fn sidecar_tagger_round_trip() {
        let s = tokenize("the dog runs").unwrap();
        let tagger =
            SidecarTagger::from_entries(vec![(s.clone(), ts(&["DT", "NN", "VBZ"]))]).unwrap();
        assert_eq!(tagger.tag(&s).unwrap(), ts(&["DT", "NN", "VBZ"]));
    }

    #[test]
    fn sidecar_tagger_unknown_sentence_errors() {
        let s = tokenize("the dog runs").unwrap();
        let tagger = SidecarTagger::from_entries(vec![(s, ts(&["DT", "NN", "VBZ"]))]).unwrap();
        let other = tokenize("a cat sleeps").unwrap();
        assert!(matches!(
            tagger.tag(&other),
            Err(Error::TaggerUnavailable(_))
        ));
    }

    #[test]
    fn sidecar_tagger_rejects_misaligned_tags() {
        let s = tokenize("the dog").unwrap();
        let result = SidecarTagger::from_entries(vec![(s, ts(&["DT", "NN", "VBZ"]))]);
        assert!(matches!(result, Err(Error::LengthMismatch { .. })));
    }
}
