//! Sentences, triples, vocabulary and numeric encoding.
//!
//! Corpus files are assumed pre-tokenized (QQP / ParaNMT style): tokens are
//! whitespace-separated and punctuation already split off. Tokenization here
//! is whitespace splitting plus lowercasing.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const SOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

pub const PAD_TOKEN: &str = "<pad>";
pub const SOS_TOKEN: &str = "<sos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";

/// A tokenized, lowercased sentence. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    tokens: Vec<String>,
}

impl Sentence {
    /// Builds a sentence from pre-split tokens. Errors on empty input or empty tokens.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.is_empty() || tokens.iter().any(|t| t.is_empty()) {
            return Err(Error::EmptyInput);
        }
        Ok(Self { tokens })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl std::fmt::Display for Sentence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.text())
    }
}

/// One training/eval instance: source X, target Y, exemplar Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Triple {
    pub source: Sentence,
    pub target: Sentence,
    pub exemplar: Sentence,
}

/// Whitespace-split, lowercased tokens.
pub fn tokenize(text: &str) -> Result<Sentence> {
    let tokens: Vec<String> = text.split_whitespace().map(|t| t.to_lowercase()).collect();
    Sentence::new(tokens)
}

/// Keeps the first `min(len, max_len)` tokens.
pub fn truncate(s: &Sentence, max_len: usize) -> Sentence {
    assert!(max_len >= 1, "max_len must be >= 1");
    if s.len() <= max_len {
        s.clone()
    } else {
        Sentence {
            tokens: s.tokens[..max_len].to_vec(),
        }
    }
}

/// Token <-> id mapping with PAD/SOS/EOS/UNK specials at ids 0..4.
///
/// Ordering is deterministic: specials first, then tokens by descending
/// frequency, ties by lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    token_to_id: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn build<'a, I>(corpus: I, min_freq: usize) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Sentence>,
    {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        let mut saw_any = false;
        for s in corpus {
            saw_any = true;
            for t in s.tokens() {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        if !saw_any {
            return Err(Error::EmptyCorpus);
        }
        let mut kept: Vec<(&str, usize)> = freq.into_iter().filter(|(_, c)| *c >= min_freq).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = vec![
            PAD_TOKEN.to_string(),
            SOS_TOKEN.to_string(),
            EOS_TOKEN.to_string(),
            UNK_TOKEN.to_string(),
        ];
        tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
        Ok(Self::from_tokens(tokens))
    }

    /// Rebuilds from an id-ordered token list (checkpoint loading).
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let token_to_id = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            tokens,
            token_to_id,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id_of(&self, token: &str) -> usize {
        *self.token_to_id.get(token).unwrap_or(&UNK)
    }

    pub fn token_of(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// SHA-256 over the id-ordered token list; used to guard checkpoint loads.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.tokens {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Maps tokens to ids; OOV becomes UNK; optionally appends EOS.
pub fn encode(s: &Sentence, vocab: &Vocabulary, add_eos: bool) -> Vec<usize> {
    let mut ids: Vec<usize> = s.tokens().iter().map(|t| vocab.id_of(t)).collect();
    if add_eos {
        ids.push(EOS);
    }
    ids
}

/// Maps ids back to tokens, stopping nowhere; PAD/SOS/EOS are skipped.
pub fn decode(ids: &[usize], vocab: &Vocabulary) -> Vec<String> {
    ids.iter()
        .filter(|&&id| id != PAD && id != SOS && id != EOS)
        .map(|&id| vocab.token_of(id).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Jsonl,
    Tsv,
}

impl FileFormat {
    /// Infers from the file extension; `.jsonl`/`.json` are JSONL, everything else TSV.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => FileFormat::Jsonl,
            _ => FileFormat::Tsv,
        }
    }
}

#[derive(Debug, Deserialize)]
struct TripleRecord {
    source: String,
    target: String,
    #[serde(default)]
    exemplar: Option<String>,
}

#[derive(Debug, Serialize)]
struct TripleRecordOut<'a> {
    source: String,
    target: String,
    exemplar: &'a str,
}

/// Outcome of loading a triples or pairs file.
#[derive(Debug)]
pub struct Loaded<T> {
    pub records: Vec<T>,
    /// Records skipped in lenient mode (empty fields).
    pub skipped: usize,
}

fn parse_line(
    line: &str,
    lineno: usize,
    format: FileFormat,
    strict: bool,
    want_exemplar: bool,
) -> Result<Option<(String, String, Option<String>)>> {
    match format {
        FileFormat::Jsonl => match serde_json::from_str::<TripleRecord>(line) {
            Ok(rec) => Ok(Some((rec.source, rec.target, rec.exemplar))),
            Err(e) => {
                if strict {
                    Err(Error::Parse {
                        line: lineno,
                        msg: e.to_string(),
                    })
                } else {
                    Ok(None)
                }
            }
        },
        FileFormat::Tsv => {
            let cols: Vec<&str> = line.split('\t').collect();
            let min_cols = if want_exemplar { 3 } else { 2 };
            if cols.len() < min_cols {
                if strict {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected at least {min_cols} tab-separated columns, got {}", cols.len()),
                    });
                }
                return Ok(None);
            }
            let exemplar = cols.get(2).map(|s| s.to_string());
            Ok(Some((cols[0].to_string(), cols[1].to_string(), exemplar)))
        }
    }
}

/// Loads (source, target, exemplar) triples, truncating each sentence to `max_len`.
///
/// Lenient mode skips malformed records and records with an empty field,
/// counting them; strict mode errors with the line number.
pub fn load_triples(
    path: &Path,
    format: FileFormat,
    max_len: usize,
    strict: bool,
) -> Result<Loaded<Triple>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let Some((src, tgt, exm)) = parse_line(&line, lineno, format, strict, true)? else {
            skipped += 1;
            continue;
        };
        let exm = exm.unwrap_or_default();
        let fields = [&src, &tgt, &exm];
        if fields.iter().any(|f| f.trim().is_empty()) {
            if strict {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "empty field".to_string(),
                });
            }
            skipped += 1;
            continue;
        }
        records.push(Triple {
            source: truncate(&tokenize(&src)?, max_len),
            target: truncate(&tokenize(&tgt)?, max_len),
            exemplar: truncate(&tokenize(&exm)?, max_len),
        });
    }
    if skipped > 0 {
        log::info!("load_triples: skipped {skipped} record(s) with missing/empty fields");
    }
    Ok(Loaded { records, skipped })
}

/// Loads (source, target) pairs for exemplar mining; same formats minus the exemplar column.
pub fn load_pairs(
    path: &Path,
    format: FileFormat,
    max_len: usize,
    strict: bool,
) -> Result<Loaded<(Sentence, Sentence)>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut skipped = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let Some((src, tgt, _)) = parse_line(&line, lineno, format, strict, false)? else {
            skipped += 1;
            continue;
        };
        if src.trim().is_empty() || tgt.trim().is_empty() {
            if strict {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "empty field".to_string(),
                });
            }
            skipped += 1;
            continue;
        }
        records.push((
            truncate(&tokenize(&src)?, max_len),
            truncate(&tokenize(&tgt)?, max_len),
        ));
    }
    if skipped > 0 {
        log::info!("load_pairs: skipped {skipped} record(s) with missing/empty fields");
    }
    Ok(Loaded { records, skipped })
}

/// Writes triples as JSONL, one record per line.
pub fn write_triples_jsonl<W: std::io::Write>(mut w: W, triples: &[Triple]) -> Result<()> {
    for t in triples {
        let rec = TripleRecordOut {
            source: t.source.text(),
            target: t.target.text(),
            exemplar: &t.exemplar.text(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Pretrained-embedding load result.
#[derive(Debug)]
pub struct EmbeddingInit {
    /// |V| x d matrix; rows for covered tokens copied bit-exact from the file,
    /// the rest sampled uniform(-0.1, 0.1).
    pub matrix: Array2<f64>,
    /// Fraction of vocabulary tokens found in the file.
    pub coverage: f64,
}

/// Reads a text embedding file ("token v1 .. vd" per line) into a |V| x d matrix.
pub fn load_pretrained_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingInit> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut matrix = Array2::zeros((vocab.len(), dim));
    for row in matrix.rows_mut() {
        for v in row {
            *v = rng.gen_range(-0.1..0.1);
        }
    }
    let mut covered = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "missing token".to_string(),
        })?;
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(Error::DimMismatch {
                what: format!("embedding file row {} ({token})", idx + 1),
                expected: dim,
                actual: values.len(),
            });
        }
        if let Some(&id) = vocab.token_to_id.get(token) {
            for (j, v) in values.into_iter().enumerate() {
                matrix[(id, j)] = v;
            }
            covered += 1;
        }
    }
    let coverage = covered as f64 / vocab.len() as f64;
    log::info!("pretrained embeddings: {covered}/{} tokens covered", vocab.len());
    Ok(EmbeddingInit { matrix, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sent(toks: &[&str]) -> Sentence {
        Sentence::new(toks.iter().map(|t| t.to_string()).collect()).unwrap()
    }

    #[test]
    fn tokenize_splits_on_whitespace() {
        let s = tokenize("what is love ?").unwrap();
        assert_eq!(s.tokens(), &["what", "is", "love", "?"]);
    }

    #[test]
    fn tokenize_lowercases() {
        let s = tokenize("How Do I").unwrap();
        assert_eq!(s.tokens(), &["how", "do", "i"]);
    }

    #[test]
    fn tokenize_rejects_empty() {
        assert!(matches!(tokenize(""), Err(Error::EmptyInput)));
        assert!(matches!(tokenize("   "), Err(Error::EmptyInput)));
    }

    #[test]
    fn truncate_caps_length() {
        let long: Vec<String> = (0..20).map(|i| format!("t{i}")).collect();
        let s = Sentence::new(long).unwrap();
        let t = truncate(&s, 15);
        assert_eq!(t.len(), 15);
        assert_eq!(t.tokens()[..], s.tokens()[..15]);
    }

    #[test]
    fn truncate_noop_under_limit() {
        let s = sent(&["a", "b", "c"]);
        assert_eq!(truncate(&s, 15), s);
    }

    #[test]
    fn truncate_boundary_one() {
        let s = sent(&["a", "b", "c"]);
        assert_eq!(truncate(&s, 1).tokens(), &["a"]);
    }

    #[test]
    fn vocabulary_includes_specials_and_frequent_tokens() {
        let corpus = vec![sent(&["a", "b"]), sent(&["a"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(v.len(), 6);
        assert_eq!(v.token_of(PAD), Some(PAD_TOKEN));
        assert_eq!(v.token_of(SOS), Some(SOS_TOKEN));
        assert_eq!(v.token_of(EOS), Some(EOS_TOKEN));
        assert_eq!(v.token_of(UNK), Some(UNK_TOKEN));
        // "a" (freq 2) before "b" (freq 1)
        assert_eq!(v.token_of(4), Some("a"));
        assert_eq!(v.token_of(5), Some("b"));
    }

    #[test]
    fn vocabulary_min_freq_filters() {
        let corpus = vec![sent(&["a", "b"]), sent(&["a"])];
        let v = Vocabulary::build(&corpus, 2).unwrap();
        assert_eq!(v.len(), 5);
        assert_eq!(v.id_of("b"), UNK);
    }

    #[test]
    fn vocabulary_empty_corpus_errors() {
        let corpus: Vec<Sentence> = vec![];
        assert!(matches!(Vocabulary::build(&corpus, 1), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn vocabulary_ordering_is_deterministic() {
        let corpus = vec![sent(&["z", "m", "a"]), sent(&["m"])];
        let a = Vocabulary::build(&corpus, 1).unwrap();
        let b = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(a.tokens(), b.tokens());
        // m freq 2 first, then a/z lexicographic
        assert_eq!(a.token_of(4), Some("m"));
        assert_eq!(a.token_of(5), Some("a"));
        assert_eq!(a.token_of(6), Some("z"));
    }

    #[test]
    fn encode_decode_round_trip() {
        let corpus = vec![sent(&["the", "dog", "runs"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let s = sent(&["the", "dog", "runs"]);
        let ids = encode(&s, &v, false);
        assert_eq!(decode(&ids, &v), s.tokens());
    }

    #[test]
    fn encode_maps_oov_to_unk() {
        let corpus = vec![sent(&["a"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let ids = encode(&sent(&["zzz"]), &v, false);
        assert_eq!(ids, vec![UNK]);
    }

    #[test]
    fn encode_appends_eos() {
        let corpus = vec![sent(&["a"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let ids = encode(&sent(&["a"]), &v, true);
        assert_eq!(*ids.last().unwrap(), EOS);
    }

    #[test]
    fn load_triples_tsv_happy_path() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a b\tc d\te f").unwrap();
        writeln!(f, "g\th\ti").unwrap();
        writeln!(f, "j k l\tm\tn o").unwrap();
        let out = load_triples(f.path(), FileFormat::Tsv, 15, true).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.skipped, 0);
        assert_eq!(out.records[0].source.tokens(), &["a", "b"]);
        assert_eq!(out.records[0].exemplar.tokens(), &["e", "f"]);
    }

    #[test]
    fn load_triples_lenient_skips_empty_field() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a\tb\t").unwrap();
        writeln!(f, "a\tb\tc").unwrap();
        let out = load_triples(f.path(), FileFormat::Tsv, 15, false).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.skipped, 1);
    }

    #[test]
    fn load_triples_strict_reports_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "{{\"source\": \"a\", \"target\": \"b\", \"exemplar\": \"c\"}}").unwrap();
        writeln!(f, "not json").unwrap();
        let err = load_triples(f.path(), FileFormat::Jsonl, 15, true).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_triples_applies_truncation() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        let long = (0..20).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        writeln!(f, "{long}\t{long}\t{long}").unwrap();
        let out = load_triples(f.path(), FileFormat::Tsv, 15, true).unwrap();
        assert_eq!(out.records[0].source.len(), 15);
        assert_eq!(out.records[0].target.len(), 15);
        assert_eq!(out.records[0].exemplar.len(), 15);
    }

    #[test]
    fn pretrained_embeddings_copy_and_fill() {
        let corpus = vec![sent(&["hello", "world"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "hello 0.25 -0.5 1.0").unwrap();
        writeln!(f, "absent 0.1 0.1 0.1").unwrap();
        let init = load_pretrained_embeddings(f.path(), &v, 3, 7).unwrap();
        let hid = v.id_of("hello");
        assert_eq!(init.matrix[(hid, 0)], 0.25);
        assert_eq!(init.matrix[(hid, 1)], -0.5);
        assert_eq!(init.matrix[(hid, 2)], 1.0);
        let wid = v.id_of("world");
        for j in 0..3 {
            assert!(init.matrix[(wid, j)].abs() < 0.1);
        }
        assert!((init.coverage - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn pretrained_embeddings_dim_mismatch_errors() {
        let corpus = vec![sent(&["hello"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "hello 0.1 0.2").unwrap();
        let err = load_pretrained_embeddings(f.path(), &v, 300, 7).unwrap_err();
        assert!(matches!(err, Error::DimMismatch { .. }));
    }
}
