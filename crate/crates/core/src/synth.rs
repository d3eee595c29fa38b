//! Synthetic paraphrase corpus for tests and demos.
//!
//! Sentences are template expansions over a fixed lexicon: a "content" is a
//! (verb, object) pair and a "style" is one of thirteen question/statement
//! templates with distinct POS tag skeletons. A paraphrase pair renders one
//! content under two different templates; an exemplar renders a different
//! content under the target's template. Every word carries exactly one tag,
//! so gold tag sequences are available by lookup.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Sentence, Triple};
use crate::error::Result;
use crate::syntax::TagSequence;

/// (pattern, tags); `V` and `O` are the verb/object slots.
const TEMPLATES: [(&str, &str); 13] = [
    ("how do i V O ?", "WRB VBP PRP VB NN ."),
    ("how can i V O ?", "WRB MD PRP VB NN ."),
    ("can you V O ?", "MD PRP VB NN ."),
    ("what is the best way to V O ?", "WP VBZ DT JJS NN TO VB NN ."),
    ("is it possible to V O ?", "VBZ PRP JJ TO VB NN ."),
    ("i want to V O .", "PRP VBP TO VB NN ."),
    ("what should i try to V O ?", "WP MD PRP VB TO VB NN ."),
    ("tell me the best way to V O .", "VB PRP DT JJS NN TO VB NN ."),
    ("where can i V my O ?", "WRB MD PRP VB PRP$ NN ."),
    ("you should V O now .", "PRP MD VB NN RB ."),
    ("why is it hard to V O ?", "WRB VBZ PRP JJ TO VB NN ."),
    ("what is a good way to V O ?", "WP VBZ DT JJ NN TO VB NN ."),
    ("how do you V O without help ?", "WRB VBP PRP VB NN IN NN ."),
];

const VERBS: [&str; 40] = [
    "learn", "get", "find", "buy", "make", "start", "use", "avoid", "improve", "cook", "clean",
    "write", "read", "play", "watch", "visit", "study", "build", "grow", "save", "earn", "sell",
    "teach", "speak", "practice", "download", "install", "fix", "open", "close", "choose",
    "compare", "explore", "master", "organize", "paint", "plan", "prepare", "repair", "understand",
];

const OBJECTS: [&str; 56] = [
    "python", "java", "linux", "rust", "english", "spanish", "french", "german", "italian",
    "chinese", "japanese", "korean", "russian", "arabic", "guitar", "piano", "violin", "trumpet",
    "chess", "poker", "coffee", "tea", "wine", "bread", "pasta", "sushi", "rice", "soup", "yoga",
    "karate", "boxing", "math", "physics", "chemistry", "biology", "history", "geography",
    "economics", "law", "medicine", "business", "marketing", "design", "photography", "money",
    "gold", "bitcoin", "anime", "football", "tennis", "golf", "basketball", "cricket", "hockey",
    "music", "art",
];

pub fn template_count() -> usize {
    TEMPLATES.len()
}

fn lexicon() -> &'static HashMap<&'static str, &'static str> {
    static LEX: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    LEX.get_or_init(|| {
        let mut map = HashMap::new();
        for (pattern, tags) in TEMPLATES {
            for (w, t) in pattern.split(' ').zip(tags.split(' ')) {
                if w != "V" && w != "O" {
                    let prev = map.insert(w, t);
                    assert!(prev.is_none() || prev == Some(t), "tag conflict for {w}");
                }
            }
        }
        for v in VERBS {
            map.insert(v, "VB");
        }
        for o in OBJECTS {
            map.insert(o, "NN");
        }
        map
    })
}

/// Renders template `t` with content (verb, object).
pub fn render(template: usize, verb: &str, object: &str) -> Sentence {
    let (pattern, _) = TEMPLATES[template];
    let tokens: Vec<String> = pattern
        .split(' ')
        .map(|w| match w {
            "V" => verb.to_string(),
            "O" => object.to_string(),
            other => other.to_string(),
        })
        .collect();
    Sentence::new(tokens).expect("templates are non-empty")
}

/// Gold tags for any sentence over the synthetic lexicon.
pub fn gold_tags(s: &Sentence) -> Option<TagSequence> {
    let lex = lexicon();
    let tags: Option<Vec<String>> = s
        .tokens()
        .iter()
        .map(|t| lex.get(t.as_str()).map(|tag| tag.to_string()))
        .collect();
    tags.map(TagSequence::new)
}

fn shuffled_contents(seed: u64) -> (Vec<(usize, usize)>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contents: Vec<(usize, usize)> = (0..VERBS.len())
        .flat_map(|v| (0..OBJECTS.len()).map(move |o| (v, o)))
        .collect();
    contents.shuffle(&mut rng);
    (contents, rng)
}

/// `n` paraphrase pairs with mostly-distinct contents (contents repeat only
/// once the grid is exhausted).
pub fn paraphrase_pairs(n: usize, seed: u64) -> Vec<(Sentence, Sentence)> {
    let (contents, mut rng) = shuffled_contents(seed);
    (0..n)
        .map(|i| {
            let (v, o) = contents[i % contents.len()];
            let tx = rng.gen_range(0..TEMPLATES.len());
            let ty = (tx + rng.gen_range(1..TEMPLATES.len())) % TEMPLATES.len();
            (
                render(tx, VERBS[v], OBJECTS[o]),
                render(ty, VERBS[v], OBJECTS[o]),
            )
        })
        .collect()
}

/// Train/test pair sets over disjoint contents.
pub fn disjoint_pairs(
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> (Vec<(Sentence, Sentence)>, Vec<(Sentence, Sentence)>) {
    let (contents, mut rng) = shuffled_contents(seed);
    assert!(
        n_train + n_test <= contents.len(),
        "content grid has only {} entries",
        contents.len()
    );
    let mut make = |range: std::ops::Range<usize>| -> Vec<(Sentence, Sentence)> {
        range
            .map(|i| {
                let (v, o) = contents[i];
                let tx = rng.gen_range(0..TEMPLATES.len());
                let ty = (tx + rng.gen_range(1..TEMPLATES.len())) % TEMPLATES.len();
                (
                    render(tx, VERBS[v], OBJECTS[o]),
                    render(ty, VERBS[v], OBJECTS[o]),
                )
            })
            .collect()
    };
    let train = make(0..n_train);
    let test = make(n_train..n_train + n_test);
    (train, test)
}

/// `n` full triples with directly constructed exemplars: the exemplar uses
/// the target's template with a different content.
pub fn triples(n: usize, seed: u64) -> Vec<Triple> {
    let (contents, mut rng) = shuffled_contents(seed);
    (0..n)
        .map(|i| {
            let (v, o) = contents[i % contents.len()];
            let (v2, o2) = contents[(i + contents.len() / 2) % contents.len()];
            let tx = rng.gen_range(0..TEMPLATES.len());
            let ty = (tx + rng.gen_range(1..TEMPLATES.len())) % TEMPLATES.len();
            Triple {
                source: render(tx, VERBS[v], OBJECTS[o]),
                target: render(ty, VERBS[v], OBJECTS[o]),
                exemplar: render(ty, VERBS[v2], OBJECTS[o2]),
            }
        })
        .collect()
}

/// Writes a pairs file (TSV) plus its sidecar tag file.
pub fn write_pairs_tsv(
    pairs_path: &Path,
    sidecar_path: Option<&Path>,
    pairs: &[(Sentence, Sentence)],
) -> Result<()> {
    let mut pf = std::io::BufWriter::new(std::fs::File::create(pairs_path)?);
    for (x, y) in pairs {
        writeln!(pf, "{x}\t{y}")?;
    }
    if let Some(path) = sidecar_path {
        let mut sf = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (x, y) in pairs {
            let tx = gold_tags(x).expect("synthetic sentence");
            let ty = gold_tags(y).expect("synthetic sentence");
            writeln!(sf, "{}\t{}", tx.tags().join(" "), ty.tags().join(" "))?;
        }
    }
    Ok(())
}
