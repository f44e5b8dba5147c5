//! Data model for entity-tagged relation-extraction sentences.
//!
//! A sentence marks its two entities inline with `<e1>…</e1>` and
//! `<e2>…</e2>`. [`RawSentence`] holds that text as read from disk, faults
//! and all; [`TaggedSentence`] is the validated, tokenized form with the
//! tags turned into token spans.

mod jsonl;
mod label;
mod semeval;
mod tags;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use jsonl::{read_jsonl, write_jsonl, write_jsonl_record};
pub use label::{Direction, RelationLabel, RelationType};
pub use semeval::{parse_semeval_file, write_semeval};
pub use tags::{analyze, render_tagged, tokenize_and_bind, Fault, FaultCode, TagLiteral};

/// Sentence identifier carried over from the source file.
pub type SentenceId = u64;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown relation label {0:?}")]
    UnknownLabel(String),
    #[error("record {record}: {message}")]
    MalformedRecord { record: usize, message: String },
    #[error("duplicate sentence ids: {}", format_ids(.0))]
    DuplicateIds(Vec<SentenceId>),
    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },
    #[error("sentence {id}: {message}")]
    InvalidSentence { id: SentenceId, message: String },
    #[error("sentence {id} does not bind: {}", format_faults(.faults))]
    Faults { id: SentenceId, faults: Vec<Fault> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_ids(ids: &[SentenceId]) -> String {
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_faults(faults: &[Fault]) -> String {
    faults
        .iter()
        .map(|f| f.code.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Inclusive token range of an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize) -> Self {
        EntitySpan { start, end }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end + 1 - self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

/// Where a sentence came from within an augmented corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Orig,
    Bt,
    Del,
    Swap,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Orig => "orig",
            Provenance::Bt => "bt",
            Provenance::Del => "del",
            Provenance::Swap => "swap",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pre-validation sentence: text may hold tags in any arrangement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSentence {
    pub id: SentenceId,
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

/// A sentence with exactly one e1 span, one e2 span and a relation label.
///
/// Construct through [`TaggedSentence::new`] (or [`tokenize_and_bind`]) so the
/// invariants hold: spans in bounds and disjoint, no tag literals in tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub id: SentenceId,
    tokens: Vec<String>,
    e1: EntitySpan,
    e2: EntitySpan,
    pub label: RelationLabel,
    pub comment: Option<String>,
    pub provenance: Option<Provenance>,
}

impl TaggedSentence {
    pub fn new(
        id: SentenceId,
        tokens: Vec<String>,
        e1: EntitySpan,
        e2: EntitySpan,
        label: RelationLabel,
    ) -> Result<Self, CorpusError> {
        let invalid = |message: String| CorpusError::InvalidSentence { id, message };
        for (name, span) in [("e1", e1), ("e2", e2)] {
            if span.start > span.end || span.end >= tokens.len() {
                return Err(invalid(format!(
                    "{name} span [{}..{}] out of bounds for {} tokens",
                    span.start,
                    span.end,
                    tokens.len()
                )));
            }
        }
        if e1.overlaps(&e2) {
            return Err(invalid("e1 and e2 spans overlap".to_string()));
        }
        if let Some(tok) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(invalid(format!(
                "token {tok:?} is empty or contains whitespace"
            )));
        }
        if let Some(tok) = tokens.iter().find(|t| TagLiteral::find_in(t).is_some()) {
            return Err(invalid(format!("token {tok:?} contains a tag literal")));
        }
        Ok(TaggedSentence {
            id,
            tokens,
            e1,
            e2,
            label,
            comment: None,
            provenance: None,
        })
    }

    pub fn with_comment(mut self, comment: Option<String>) -> Self {
        self.comment = comment;
        self
    }

    pub fn with_provenance(mut self, provenance: Option<Provenance>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn e1(&self) -> EntitySpan {
        self.e1
    }

    pub fn e2(&self) -> EntitySpan {
        self.e2
    }

    pub fn e1_surface(&self) -> &[String] {
        &self.tokens[self.e1.indices()]
    }

    pub fn e2_surface(&self) -> &[String] {
        &self.tokens[self.e2.indices()]
    }

    pub fn in_entity(&self, index: usize) -> bool {
        self.e1.contains(index) || self.e2.contains(index)
    }

    pub fn into_parts(self) -> (Vec<String>, EntitySpan, EntitySpan) {
        (self.tokens, self.e1, self.e2)
    }
}

/// Processing stage recorded on a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Repaired,
    Augmented,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub source: Option<PathBuf>,
    pub stage: Stage,
}

/// Anything stored in a corpus has an id.
pub trait HasId {
    fn id(&self) -> SentenceId;
}

impl HasId for RawSentence {
    fn id(&self) -> SentenceId {
        self.id
    }
}

impl HasId for TaggedSentence {
    fn id(&self) -> SentenceId {
        self.id
    }
}

/// Ordered sentences with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus<S> {
    pub meta: CorpusMeta,
    sentences: Vec<S>,
}

impl<S: HasId> Corpus<S> {
    pub fn new(sentences: Vec<S>, meta: CorpusMeta) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        let mut dupes = BTreeSet::new();
        for s in &sentences {
            if !seen.insert(s.id()) {
                dupes.insert(s.id());
            }
        }
        if !dupes.is_empty() {
            return Err(CorpusError::DuplicateIds(dupes.into_iter().collect()));
        }
        Ok(Corpus { meta, sentences })
    }

    pub fn with_stage(sentences: Vec<S>, stage: Stage) -> Result<Self, CorpusError> {
        Self::new(
            sentences,
            CorpusMeta {
                source: None,
                stage,
            },
        )
    }

    pub fn sentences(&self) -> &[S] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<S> {
        self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, S> {
        self.sentences.iter()
    }

    pub fn max_id(&self) -> Option<SentenceId> {
        self.sentences.iter().map(HasId::id).max()
    }
}

impl<'a, S> IntoIterator for &'a Corpus<S> {
    type Item = &'a S;
    type IntoIter = std::slice::Iter<'a, S>;

    fn into_iter(self) -> Self::IntoIter {
        self.sentences.iter()
    }
}

impl Corpus<TaggedSentence> {
    /// Renders every sentence back to tagged raw text.
    pub fn to_raw(&self) -> Corpus<RawSentence> {
        let sentences = self
            .sentences
            .iter()
            .map(|s| RawSentence {
                id: s.id,
                text: render_tagged(s),
                label: s.label.to_string(),
                comment: s.comment.clone(),
            })
            .collect();
        Corpus {
            meta: CorpusMeta {
                source: self.meta.source.clone(),
                stage: Stage::Raw,
            },
            sentences,
        }
    }
}

impl Corpus<RawSentence> {
    /// Binds every sentence, failing on the first one with faults.
    pub fn bind_all(&self) -> Result<Corpus<TaggedSentence>, CorpusError> {
        let sentences = self
            .sentences
            .iter()
            .map(tokenize_and_bind)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Corpus {
            meta: self.meta.clone(),
            sentences,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn rejects_overlapping_spans() {
        let err = TaggedSentence::new(
            1,
            toks("a b c"),
            EntitySpan::new(0, 1),
            EntitySpan::new(1, 2),
            RelationLabel::Other,
        );
        assert!(err.is_err());
    }

    #[test]
    fn rejects_out_of_bounds_and_inverted_spans() {
        let label = RelationLabel::Other;
        assert!(TaggedSentence::new(
            1,
            toks("a b"),
            EntitySpan::new(0, 0),
            EntitySpan::new(2, 2),
            label
        )
        .is_err());
        assert!(TaggedSentence::new(
            1,
            toks("a b c"),
            EntitySpan::new(1, 0),
            EntitySpan::new(2, 2),
            label
        )
        .is_err());
    }

    #[test]
    fn rejects_tag_literals_in_tokens() {
        let err = TaggedSentence::new(
            1,
            toks("a <e1>b c"),
            EntitySpan::new(0, 0),
            EntitySpan::new(2, 2),
            RelationLabel::Other,
        );
        assert!(err.is_err());
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        let raw = |id| RawSentence {
            id,
            text: "x".into(),
            label: "Other".into(),
            comment: None,
        };
        let err = Corpus::with_stage(vec![raw(1), raw(2), raw(1), raw(2), raw(3)], Stage::Raw)
            .unwrap_err();
        match err {
            CorpusError::DuplicateIds(ids) => assert_eq!(ids, vec![1, 2]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
