//! Tag-preserving augmentation: random deletion, random swap and
//! back-translation, all deterministic under a seed.
//!
//! Deletion and swap never touch entity tokens. Each variant draws from its
//! own ChaCha8 stream seeded by [`variant_seed`], so results do not depend on
//! processing order or thread count.
//!
//! Back-translation replaces each entity span with a single sentinel token
//! (`ENTX1Q`, `ENTX2Q`), sends the text source→pivot→source, and expands the
//! sentinels back to the original entity tokens. If either sentinel is lost
//! or duplicated the variant is dropped.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    Corpus, CorpusError, CorpusMeta, EntitySpan, Provenance, SentenceId, Stage, TagLiteral,
    TaggedSentence,
};
use crate::translate::{TranslateError, TranslationBackend, TranslationRequest};

pub const E1_SENTINEL: &str = "ENTX1Q";
pub const E2_SENTINEL: &str = "ENTX2Q";

pub fn is_sentinel(token: &str) -> bool {
    token == E1_SENTINEL || token == E2_SENTINEL
}

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("invalid augmentation config: {0}")]
    Config(String),
    #[error("back-translation of sentence {sentence_id} failed: {source}")]
    Backend {
        sentence_id: SentenceId,
        #[source]
        source: TranslateError,
    },
    #[error("sentence id space exhausted")]
    IdOverflow,
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub seed: u64,
    pub deletions_per_sentence: usize,
    pub swaps_per_sentence: usize,
    pub backtranslate: bool,
    pub keep_unchanged_backtranslations: bool,
    pub pivot_language: String,
    pub source_language: String,
    /// Concurrent back-translation workers.
    pub max_in_flight: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            seed: 0,
            deletions_per_sentence: 1,
            swaps_per_sentence: 1,
            backtranslate: false,
            keep_unchanged_backtranslations: true,
            pivot_language: "en".to_string(),
            source_language: "fa".to_string(),
            max_in_flight: 4,
        }
    }
}

impl AugmentConfig {
    /// Back-translation only, as used for corpus doubling.
    pub fn backtranslation_only(seed: u64) -> Self {
        AugmentConfig {
            seed,
            deletions_per_sentence: 0,
            swaps_per_sentence: 0,
            backtranslate: true,
            ..AugmentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        let bad = |m: &str| Err(AugmentError::Config(m.to_string()));
        if self.pivot_language.trim().is_empty() || self.source_language.trim().is_empty() {
            return bad("language codes must be non-empty");
        }
        if self.backtranslate && self.pivot_language == self.source_language {
            return bad("pivot and source language must differ");
        }
        if self.max_in_flight == 0 {
            return bad("max_in_flight must be at least 1");
        }
        Ok(())
    }

    fn is_noop(&self) -> bool {
        !self.backtranslate && self.deletions_per_sentence == 0 && self.swaps_per_sentence == 0
    }
}

/// Per-token flag: true inside e1 or e2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectedMask(Vec<bool>);

impl ProtectedMask {
    pub fn new(s: &TaggedSentence) -> Self {
        ProtectedMask((0..s.tokens().len()).map(|i| s.in_entity(i)).collect())
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn unprotected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &p)| !p)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Minimum unprotected tokens for deletion and swap to act.
pub const MIN_DELETE_CANDIDATES: usize = 3;
pub const MIN_SWAP_CANDIDATES: usize = 2;

fn rebuild(
    s: &TaggedSentence,
    tokens: Vec<String>,
    e1: EntitySpan,
    e2: EntitySpan,
) -> TaggedSentence {
    TaggedSentence::new(s.id, tokens, e1, e2, s.label)
        .expect("augmentation keeps spans bound to entity tokens")
        .with_comment(s.comment.clone())
        .with_provenance(s.provenance)
}

/// Removes one uniformly chosen unprotected token, shifting spans after it.
/// Sentences with fewer than 3 unprotected tokens come back unchanged.
pub fn random_delete<R: Rng + ?Sized>(s: &TaggedSentence, rng: &mut R) -> TaggedSentence {
    let candidates = ProtectedMask::new(s).unprotected();
    if candidates.len() < MIN_DELETE_CANDIDATES {
        return s.clone();
    }
    let victim = candidates[rng.gen_range(0..candidates.len())];
    let mut tokens = s.tokens().to_vec();
    tokens.remove(victim);
    let shift = |span: EntitySpan| {
        if span.start > victim {
            EntitySpan::new(span.start - 1, span.end - 1)
        } else {
            span
        }
    };
    rebuild(s, tokens, shift(s.e1()), shift(s.e2()))
}

/// Exchanges the tokens at two distinct, uniformly chosen unprotected
/// positions. Sentences with fewer than 2 unprotected tokens come back
/// unchanged.
pub fn random_swap<R: Rng + ?Sized>(s: &TaggedSentence, rng: &mut R) -> TaggedSentence {
    let candidates = ProtectedMask::new(s).unprotected();
    if candidates.len() < MIN_SWAP_CANDIDATES {
        return s.clone();
    }
    let picked = index::sample(rng, candidates.len(), 2);
    let mut tokens = s.tokens().to_vec();
    tokens.swap(candidates[picked.index(0)], candidates[picked.index(1)]);
    rebuild(s, tokens, s.e1(), s.e2())
}

/// Seed for the `k`-th variant of kind `op` of sentence `id`: the first 32
/// bytes of SHA-256 over a fixed domain tag, `seed`, `id`, `op` and `k`
/// (integers little-endian).
pub fn variant_seed(seed: u64, id: SentenceId, op: Provenance, k: usize) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"relcorpus/augment/v1\0");
    h.update(seed.to_le_bytes());
    h.update(id.to_le_bytes());
    h.update(op.as_str().as_bytes());
    h.update((k as u64).to_le_bytes());
    h.finalize().into()
}

pub fn variant_rng(seed: u64, id: SentenceId, op: Provenance, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(variant_seed(seed, id, op, k))
}

/// Why a variant was not emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    SentinelMissing,
    SentinelDuplicated,
    TagLiteral,
    Unchanged,
    DegenerateGuard,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::SentinelMissing => "sentinel-missing",
            DropReason::SentinelDuplicated => "sentinel-duplicated",
            DropReason::TagLiteral => "tag-literal",
            DropReason::Unchanged => "unchanged",
            DropReason::DegenerateGuard => "degenerate-guard",
        }
    }
}

/// Outcome of back-translating one sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Projection {
    Projected(TaggedSentence),
    Dropped(DropReason),
}

impl Projection {
    pub fn into_sentence(self) -> Option<TaggedSentence> {
        match self {
            Projection::Projected(s) => Some(s),
            Projection::Dropped(_) => None,
        }
    }
}

/// Entity spans collapsed to sentinels, single-space joined.
pub fn sentinel_text(s: &TaggedSentence) -> String {
    let mut words: Vec<&str> = Vec::with_capacity(s.tokens().len());
    for (i, token) in s.tokens().iter().enumerate() {
        if i == s.e1().start {
            words.push(E1_SENTINEL);
        } else if i == s.e2().start {
            words.push(E2_SENTINEL);
        } else if !s.in_entity(i) {
            words.push(token);
        }
    }
    words.join(" ")
}

/// Splits whitespace tokens further so sentinels glued to punctuation
/// (`ENTX1Q,`) become tokens of their own.
fn split_sentinels(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut rest = word;
        loop {
            let hit = [E1_SENTINEL, E2_SENTINEL]
                .iter()
                .filter_map(|s| rest.find(s).map(|at| (at, *s)))
                .min();
            match hit {
                Some((at, sentinel)) => {
                    if at > 0 {
                        out.push(&rest[..at]);
                    }
                    out.push(&rest[at..at + sentinel.len()]);
                    rest = &rest[at + sentinel.len()..];
                }
                None => {
                    if !rest.is_empty() {
                        out.push(rest);
                    }
                    break;
                }
            }
        }
    }
    out
}

/// Re-expands sentinels in `translated` to the entity tokens of `original`.
pub fn project_back(original: &TaggedSentence, translated: &str) -> Projection {
    let words = split_sentinels(translated);
    for sentinel in [E1_SENTINEL, E2_SENTINEL] {
        match words.iter().filter(|w| **w == sentinel).count() {
            0 => return Projection::Dropped(DropReason::SentinelMissing),
            1 => {}
            _ => return Projection::Dropped(DropReason::SentinelDuplicated),
        }
    }
    if words.iter().any(|w| TagLiteral::find_in(w).is_some()) {
        return Projection::Dropped(DropReason::TagLiteral);
    }
    let mut tokens = Vec::with_capacity(words.len() + original.e1().len() + original.e2().len());
    let (mut e1, mut e2) = (None, None);
    for word in words {
        let (surface, slot) = match word {
            E1_SENTINEL => (original.e1_surface(), &mut e1),
            E2_SENTINEL => (original.e2_surface(), &mut e2),
            _ => {
                tokens.push(word.to_string());
                continue;
            }
        };
        let start = tokens.len();
        tokens.extend(surface.iter().cloned());
        *slot = Some(EntitySpan::new(start, tokens.len() - 1));
    }
    let (e1, e2) = (e1.expect("counted"), e2.expect("counted"));
    Projection::Projected(rebuild(original, tokens, e1, e2))
}

/// Round-trips `s` source→pivot→source through `backend`.
pub fn backtranslate(
    s: &TaggedSentence,
    backend: &dyn TranslationBackend,
    source_language: &str,
    pivot_language: &str,
) -> Result<Projection, TranslateError> {
    let forward = TranslationRequest::new(sentinel_text(s), source_language, pivot_language)?
        .for_sentence(s.id);
    let pivot = backend.translate(&forward)?;
    let back = TranslationRequest::new(pivot, pivot_language, source_language)?.for_sentence(s.id);
    let round_tripped = backend.translate(&back)?;
    Ok(project_back(s, &round_tripped))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProvenanceCounts {
    pub orig: usize,
    pub bt: usize,
    pub del: usize,
    pub swap: usize,
}

impl ProvenanceCounts {
    fn bump(&mut self, p: Provenance) {
        match p {
            Provenance::Orig => self.orig += 1,
            Provenance::Bt => self.bt += 1,
            Provenance::Del => self.del += 1,
            Provenance::Swap => self.swap += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.orig + self.bt + self.del + self.swap
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendStats {
    pub name: String,
    pub requests: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentReport {
    pub input: usize,
    pub output: usize,
    pub produced: ProvenanceCounts,
    /// provenance → drop reason → count
    pub dropped: BTreeMap<String, BTreeMap<String, usize>>,
    pub backend: Option<BackendStats>,
}

impl AugmentReport {
    fn drop(&mut self, p: Provenance, reason: DropReason) {
        *self
            .dropped
            .entry(p.as_str().to_string())
            .or_default()
            .entry(reason.as_str().to_string())
            .or_default() += 1;
    }

    pub fn dropped_count(&self, p: Provenance, reason: DropReason) -> usize {
        self.dropped
            .get(p.as_str())
            .and_then(|m| m.get(reason.as_str()))
            .copied()
            .unwrap_or(0)
    }
}

struct Outcome {
    index: usize,
    result: Result<Projection, TranslateError>,
}

fn backtranslate_all(
    sentences: &[TaggedSentence],
    backend: &dyn TranslationBackend,
    config: &AugmentConfig,
    requests: &AtomicU64,
) -> Result<Vec<Projection>, AugmentError> {
    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let outcomes = Mutex::new(Vec::with_capacity(sentences.len()));
    let workers = config.max_in_flight.min(sentences.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(s) = sentences.get(index) else { break };
                let result =
                    backtranslate(s, backend, &config.source_language, &config.pivot_language);
                requests.fetch_add(2, Ordering::SeqCst);
                if result.is_err() {
                    abort.store(true, Ordering::SeqCst);
                }
                outcomes
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .push(Outcome { index, result });
            });
        }
    });
    let mut outcomes = outcomes.into_inner().unwrap_or_else(|e| e.into_inner());
    outcomes.sort_by_key(|o| o.index);
    let mut projections = Vec::with_capacity(sentences.len());
    for o in outcomes {
        match o.result {
            Ok(p) => projections.push(p),
            Err(source) => {
                return Err(AugmentError::Backend {
                    sentence_id: sentences[o.index].id,
                    source,
                })
            }
        }
    }
    Ok(projections)
}

/// Appends augmented variants after the untouched originals.
///
/// Variant order is per original sentence: back-translation, then the
/// deletions, then the swaps. Variants get ids counting up from the largest
/// input id and carry their provenance. `backend` is required only when
/// back-translation is on.
pub fn augment_corpus(
    corpus: &Corpus<TaggedSentence>,
    config: &AugmentConfig,
    backend: Option<&dyn TranslationBackend>,
) -> Result<(Corpus<TaggedSentence>, AugmentReport), AugmentError> {
    config.validate()?;
    let originals = corpus.sentences();
    let mut report = AugmentReport {
        input: originals.len(),
        ..AugmentReport::default()
    };
    report.produced.orig = originals.len();
    if config.is_noop() {
        report.output = originals.len();
        return Ok((corpus.clone(), report));
    }

    let requests = AtomicU64::new(0);
    let projections = if config.backtranslate {
        let backend = backend.ok_or_else(|| {
            AugmentError::Config("back-translation is on but no backend was given".into())
        })?;
        let projections = backtranslate_all(originals, backend, config, &requests)?;
        report.backend = Some(BackendStats {
            name: backend.name().to_string(),
            requests: requests.load(Ordering::SeqCst),
        });
        Some(projections)
    } else {
        None
    };

    let mut next_id = corpus.max_id().map_or(Some(0), |m| m.checked_add(1));
    let mut variants = Vec::new();
    let mut emit = |s: TaggedSentence, p: Provenance, report: &mut AugmentReport| {
        let id = next_id.ok_or(AugmentError::IdOverflow)?;
        next_id = id.checked_add(1);
        let mut s = s.with_provenance(Some(p));
        s.id = id;
        variants.push(s);
        report.produced.bump(p);
        Ok::<(), AugmentError>(())
    };

    for (i, s) in originals.iter().enumerate() {
        if let Some(projections) = &projections {
            match &projections[i] {
                Projection::Projected(v)
                    if !config.keep_unchanged_backtranslations && v.tokens() == s.tokens() =>
                {
                    report.drop(Provenance::Bt, DropReason::Unchanged)
                }
                Projection::Projected(v) => emit(v.clone(), Provenance::Bt, &mut report)?,
                Projection::Dropped(reason) => report.drop(Provenance::Bt, *reason),
            }
        }
        let unprotected = ProtectedMask::new(s).unprotected().len();
        for k in 0..config.deletions_per_sentence {
            if unprotected < MIN_DELETE_CANDIDATES {
                report.drop(Provenance::Del, DropReason::DegenerateGuard);
                continue;
            }
            let v = random_delete(s, &mut variant_rng(config.seed, s.id, Provenance::Del, k));
            emit(v, Provenance::Del, &mut report)?;
        }
        for k in 0..config.swaps_per_sentence {
            if unprotected < MIN_SWAP_CANDIDATES {
                report.drop(Provenance::Swap, DropReason::DegenerateGuard);
                continue;
            }
            let v = random_swap(s, &mut variant_rng(config.seed, s.id, Provenance::Swap, k));
            emit(v, Provenance::Swap, &mut report)?;
        }
    }

    let mut sentences = originals.to_vec();
    sentences.extend(variants);
    report.output = sentences.len();
    let out = Corpus::new(
        sentences,
        CorpusMeta {
            source: corpus.meta.source.clone(),
            stage: Stage::Augmented,
        },
    )?;
    Ok((out, report))
}
