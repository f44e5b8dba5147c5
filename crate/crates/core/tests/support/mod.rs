#![allow(dead_code)]

pub mod server;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relcorpus::corpus::{Corpus, EntitySpan, RelationLabel, Stage, TaggedSentence};
use relcorpus::fusion::EmbeddingMatrix;
use relcorpus::score::{Prediction, PredictionSet, Prf, ScoreReport};

const WORDS: &[&str] = &[
    "the",
    "a",
    "company",
    "chairs",
    "plastic",
    "he",
    "sent",
    "spam",
    "clients",
    "water",
    "report",
    "agreement",
    "از",
    "به",
    "شرکت",
    "صندلی",
    "را",
    "می",
    "کند",
    ",",
    ".",
    "'s",
    "(",
    ")",
    "x-ray",
    "42",
    "$",
    "#",
    "naïve",
    "co-op",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_label<R: Rng>(rng: &mut R) -> RelationLabel {
    *RelationLabel::all().choose(rng).unwrap()
}

/// A valid tagged sentence: 2 to 24 tokens, two disjoint spans of 1 to 4
/// tokens in either order.
pub fn random_sentence<R: Rng>(rng: &mut R, id: u64) -> TaggedSentence {
    let len_a = rng.gen_range(1..=4);
    let len_b = rng.gen_range(1..=4);
    let n = rng.gen_range(len_a + len_b..=(len_a + len_b + 16));
    let tokens: Vec<String> = (0..n)
        .map(|_| WORDS.choose(rng).unwrap().to_string())
        .collect();
    let gap = n - len_a - len_b;
    let before = rng.gen_range(0..=gap);
    let between = rng.gen_range(0..=gap - before);
    let first = EntitySpan::new(before, before + len_a - 1);
    let second_start = first.end + 1 + between;
    let second = EntitySpan::new(second_start, second_start + len_b - 1);
    let (e1, e2) = if rng.gen_bool(0.5) {
        (first, second)
    } else {
        (second, first)
    };
    TaggedSentence::new(id, tokens, e1, e2, random_label(rng))
        .expect("generator builds valid spans")
}

pub fn random_corpus(seed: u64, n: usize) -> Corpus<TaggedSentence> {
    let mut r = rng(seed);
    let sentences = (0..n as u64)
        .map(|i| random_sentence(&mut r, i * 3 + 1))
        .collect();
    Corpus::with_stage(sentences, Stage::Repaired).unwrap()
}

pub fn arb_sentence() -> impl Strategy<Value = TaggedSentence> {
    (any::<u64>(), 0u64..100_000).prop_map(|(seed, id)| random_sentence(&mut rng(seed), id))
}

pub fn arb_corpus(max: usize) -> impl Strategy<Value = Corpus<TaggedSentence>> {
    (any::<u64>(), 1..=max).prop_map(|(seed, n)| random_corpus(seed, n))
}

pub fn random_predictions<R: Rng>(rng: &mut R, max: usize) -> PredictionSet {
    let n = rng.gen_range(1..=max);
    let rows = (0..n as u64)
        .map(|id| Prediction {
            id,
            gold: random_label(rng),
            pred: random_label(rng),
        })
        .collect();
    PredictionSet::new(rows).unwrap()
}

pub fn arb_predictions(max: usize) -> impl Strategy<Value = PredictionSet> {
    any::<u64>().prop_map(move |seed| random_predictions(&mut rng(seed), max))
}

pub fn random_matrix<R: Rng>(rng: &mut R, n: usize, h: usize) -> EmbeddingMatrix {
    let rows = (0..n)
        .map(|_| (0..h).map(|_| rng.gen_range(-10.0..10.0)).collect())
        .collect();
    EmbeddingMatrix::from_rows(rows).unwrap()
}

/// Two disjoint spans inside rows `1..n` (row 0 is CLS); needs `n >= 3`.
pub fn random_spans<R: Rng>(rng: &mut R, n: usize) -> (EntitySpan, EntitySpan) {
    let avail = n - 1;
    let len_a = rng.gen_range(1..avail);
    let len_b = rng.gen_range(1..=avail - len_a);
    let gap = avail - len_a - len_b;
    let before = rng.gen_range(0..=gap);
    let between = rng.gen_range(0..=gap - before);
    let a = EntitySpan::new(1 + before, before + len_a);
    let b_start = a.end + 1 + between;
    let b = EntitySpan::new(b_start, b_start + len_b - 1);
    if rng.gen_bool(0.5) {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub const SCORE_TOL: f64 = 1e-9;

fn prf_close(a: &Prf, b: &Prf) -> bool {
    (a.precision - b.precision).abs() <= SCORE_TOL
        && (a.recall - b.recall).abs() <= SCORE_TOL
        && (a.f1 - b.f1).abs() <= SCORE_TOL
}

/// Every reported field agrees; floats within `SCORE_TOL`.
pub fn reports_agree(a: &ScoreReport, b: &ScoreReport) -> bool {
    a.regime == b.regime
        && a.total == b.total
        && a.empty_class_set == b.empty_class_set
        && a.confusion == b.confusion
        && (a.f1 - b.f1).abs() <= SCORE_TOL
        && prf_close(&a.micro, &b.micro)
        && prf_close(&a.macro_avg, &b.macro_avg)
        && a.classes.len() == b.classes.len()
        && a.classes.iter().zip(&b.classes).all(|(x, y)| {
            x.class == y.class
                && (x.tp, x.gold, x.predicted, x.averaged)
                    == (y.tp, y.gold, y.predicted, y.averaged)
                && prf_close(&x.prf, &y.prf)
        })
}
