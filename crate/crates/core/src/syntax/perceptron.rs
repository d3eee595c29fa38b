//! Averaged perceptron POS tagger.
//!
//! Greedy left-to-right tagging with Honnibal-style contextual features and
//! weight averaging. A small pretrained model is embedded in the crate
//! (trained on `data/tagged_corpus.txt` at first use, deterministically).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{TagSequence, Tagger};
use crate::corpus::Sentence;
use crate::error::{Error, Result};

const START: [&str; 2] = ["-START2-", "-START-"];
const END: [&str; 2] = ["-END-", "-END2-"];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct AveragedPerceptron {
    /// Sorted class (tag) list; scores index into it.
    classes: Vec<String>,
    /// Feature -> per-class weight vector.
    weights: HashMap<String, Vec<f64>>,
    #[serde(skip)]
    totals: HashMap<String, Vec<f64>>,
    #[serde(skip)]
    stamps: HashMap<String, Vec<u64>>,
    #[serde(skip)]
    instances: u64,
}

impl AveragedPerceptron {
    fn predict(&self, features: &[String]) -> usize {
        let mut scores = vec![0.0f64; self.classes.len()];
        for feat in features {
            if let Some(w) = self.weights.get(feat) {
                for (s, wi) in scores.iter_mut().zip(w.iter()) {
                    *s += wi;
                }
            }
        }
        // Ties break to the lowest class index (classes are sorted).
        let mut best = 0usize;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        best
    }

    fn update(&mut self, truth: usize, guess: usize, features: &[String]) {
        self.instances += 1;
        if truth == guess {
            return;
        }
        let n = self.classes.len();
        for feat in features {
            let w = self
                .weights
                .entry(feat.clone())
                .or_insert_with(|| vec![0.0; n]);
            let totals = self
                .totals
                .entry(feat.clone())
                .or_insert_with(|| vec![0.0; n]);
            let stamps = self
                .stamps
                .entry(feat.clone())
                .or_insert_with(|| vec![0; n]);
            for (cls, delta) in [(truth, 1.0), (guess, -1.0)] {
                totals[cls] += (self.instances - stamps[cls]) as f64 * w[cls];
                stamps[cls] = self.instances;
                w[cls] += delta;
            }
        }
    }

    fn average(&mut self) {
        for (feat, w) in self.weights.iter_mut() {
            let totals = self.totals.entry(feat.clone()).or_insert_with(|| vec![0.0; w.len()]);
            let stamps = self.stamps.entry(feat.clone()).or_insert_with(|| vec![0; w.len()]);
            for (cls, wi) in w.iter_mut().enumerate() {
                let total = totals[cls] + (self.instances - stamps[cls]) as f64 * *wi;
                *wi = total / self.instances as f64;
            }
        }
        self.totals.clear();
        self.stamps.clear();
    }
}

/// Averaged perceptron tagger with an unambiguous-word shortcut dictionary.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PerceptronTagger {
    model: AveragedPerceptron,
    /// Words tagged the same way (nearly) always in training data.
    tagdict: HashMap<String, usize>,
}

impl PerceptronTagger {
    /// Trains on `(tokens, tags)` sentences for `iterations` epochs with a
    /// seeded shuffle between epochs. Fully deterministic.
    pub fn train(sentences: &[(Vec<String>, Vec<String>)], iterations: usize, seed: u64) -> Self {
        let mut classes: Vec<String> = sentences
            .iter()
            .flat_map(|(_, tags)| tags.iter().cloned())
            .collect();
        classes.sort();
        classes.dedup();

        let mut tagger = PerceptronTagger {
            model: AveragedPerceptron {
                classes,
                ..Default::default()
            },
            tagdict: HashMap::new(),
        };
        tagger.build_tagdict(sentences);

        let class_index: HashMap<String, usize> = tagger
            .model
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();

        let mut order: Vec<usize> = (0..sentences.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..iterations {
            for &si in &order {
                let (words, tags) = &sentences[si];
                let context = Self::context(words);
                let mut prev = START[1].to_string();
                let mut prev2 = START[0].to_string();
                for (i, word) in words.iter().enumerate() {
                    let truth = class_index[&tags[i]];
                    let guess = match tagger.tagdict.get(&Self::normalize(word)) {
                        Some(&g) => g,
                        None => {
                            let feats = Self::features(i, word, &context, &prev, &prev2);
                            let g = tagger.model.predict(&feats);
                            tagger.model.update(truth, g, &feats);
                            g
                        }
                    };
                    prev2 = prev;
                    prev = tagger.model.classes[guess].clone();
                }
            }
            order.shuffle(&mut rng);
        }
        tagger.model.average();
        tagger
    }

    fn build_tagdict(&mut self, sentences: &[(Vec<String>, Vec<String>)]) {
        let mut counts: HashMap<String, HashMap<usize, usize>> = HashMap::new();
        let class_index: HashMap<&str, usize> = self
            .model
            .classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        for (words, tags) in sentences {
            for (w, t) in words.iter().zip(tags) {
                *counts
                    .entry(Self::normalize(w))
                    .or_default()
                    .entry(class_index[t.as_str()])
                    .or_insert(0) += 1;
            }
        }
        const FREQ_THRESHOLD: usize = 5;
        const AMBIGUITY_THRESHOLD: f64 = 0.99;
        for (word, tag_counts) in counts {
            let total: usize = tag_counts.values().sum();
            let (&mode_tag, &mode_count) = tag_counts
                .iter()
                .max_by_key(|(tag, count)| (*count, std::cmp::Reverse(*tag)))
                .unwrap();
            if total >= FREQ_THRESHOLD && mode_count as f64 / total as f64 >= AMBIGUITY_THRESHOLD {
                self.tagdict.insert(word, mode_tag);
            }
        }
    }

    fn normalize(word: &str) -> String {
        if word.contains('-') && !word.starts_with('-') {
            "!HYPHEN".to_string()
        } else if word.chars().all(|c| c.is_ascii_digit()) && !word.is_empty() {
            if word.len() == 4 {
                "!YEAR".to_string()
            } else {
                "!DIGIT".to_string()
            }
        } else {
            word.to_lowercase()
        }
    }

    fn context(words: &[String]) -> Vec<String> {
        let mut ctx = Vec::with_capacity(words.len() + 4);
        ctx.push(START[0].to_string());
        ctx.push(START[1].to_string());
        ctx.extend(words.iter().map(|w| Self::normalize(w)));
        ctx.push(END[0].to_string());
        ctx.push(END[1].to_string());
        ctx
    }

    fn suffix(s: &str, n: usize) -> &str {
        let chars: Vec<(usize, char)> = s.char_indices().collect();
        if chars.len() <= n {
            s
        } else {
            &s[chars[chars.len() - n].0..]
        }
    }

    fn prefix(s: &str) -> &str {
        match s.char_indices().nth(1) {
            Some((i, _)) => &s[..i],
            None => s,
        }
    }

    fn features(i: usize, word: &str, context: &[String], prev: &str, prev2: &str) -> Vec<String> {
        let i = i + 2; // offset for the two START pads
        let norm = Self::normalize(word);
        vec![
            "bias".to_string(),
            format!("i suffix {}", Self::suffix(&norm, 3)),
            format!("i pref1 {}", Self::prefix(&norm)),
            format!("i-1 tag {prev}"),
            format!("i-2 tag {prev2}"),
            format!("i tag+i-2 tag {prev} {prev2}"),
            format!("i word {}", context[i]),
            format!("i-1 tag+i word {prev} {}", context[i]),
            format!("i-1 word {}", context[i - 1]),
            format!("i-1 suffix {}", Self::suffix(&context[i - 1], 3)),
            format!("i-2 word {}", context[i - 2]),
            format!("i+1 word {}", context[i + 1]),
            format!("i+1 suffix {}", Self::suffix(&context[i + 1], 3)),
            format!("i+2 word {}", context[i + 2]),
        ]
    }

    /// The embedded pretrained model, trained once per process on the bundled
    /// tagged corpus with a fixed seed.
    pub fn pretrained() -> &'static PerceptronTagger {
        static MODEL: OnceLock<PerceptronTagger> = OnceLock::new();
        MODEL.get_or_init(|| {
            let corpus = include_str!("../../data/tagged_corpus.txt");
            let sentences = parse_tagged_corpus(corpus).expect("embedded tagged corpus is valid");
            PerceptronTagger::train(&sentences, 5, 2718)
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = BufWriter::new(File::create(path)?);
        serde_json::to_writer(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = BufReader::new(File::open(path)?);
        let tagger: PerceptronTagger = serde_json::from_reader(f)?;
        if tagger.model.classes.is_empty() {
            return Err(Error::TaggerUnavailable(format!(
                "model at {} has no classes",
                path.display()
            )));
        }
        Ok(tagger)
    }
}

impl Tagger for PerceptronTagger {
    fn tag(&self, sentence: &Sentence) -> Result<TagSequence> {
        if self.model.classes.is_empty() {
            return Err(Error::TaggerUnavailable("untrained model".to_string()));
        }
        let words = sentence.tokens().to_vec();
        let context = Self::context(&words);
        let mut tags = Vec::with_capacity(words.len());
        let mut prev = START[1].to_string();
        let mut prev2 = START[0].to_string();
        for (i, word) in words.iter().enumerate() {
            let guess = match self.tagdict.get(&Self::normalize(word)) {
                Some(&g) => g,
                None => {
                    let feats = Self::features(i, word, &context, &prev, &prev2);
                    self.model.predict(&feats)
                }
            };
            let tag = self.model.classes[guess].clone();
            prev2 = prev;
            prev = tag.clone();
            tags.push(tag);
        }
        Ok(TagSequence::new(tags))
    }
}

/// Parses "word_TAG word_TAG ..." lines (split on the last underscore).
pub fn parse_tagged_corpus(text: &str) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let mut sentences = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut words = Vec::new();
        let mut tags = Vec::new();
        for pair in line.split_whitespace() {
            let cut = pair.rfind('_').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("token \"{pair}\" has no _TAG suffix"),
            })?;
            words.push(pair[..cut].to_string());
            tags.push(pair[cut + 1..].to_string());
        }
        if !words.is_empty() {
            sentences.push((words, tags));
        }
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(sentences)
}
