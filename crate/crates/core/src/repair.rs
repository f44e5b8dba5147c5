//! Validate-and-repair pipeline for raw tagged sentences.
//!
//! Order per sentence: curated replacement by id, then the swapped-close
//! rewrite, then removal of anything that still has a fault. Every input id
//! ends up in the [`RepairReport`] with exactly one [`Fate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::BufRead;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{analyze, Corpus, CorpusMeta, RawSentence, SentenceId, Stage, TaggedSentence};
pub use crate::corpus::{Fault, FaultCode, TagLiteral};

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("replacement for sentence {id} does not validate: {}", list(.faults))]
    InvalidReplacement { id: SentenceId, faults: Vec<Fault> },
    #[error("replacement list line {line}: {message}")]
    ReplacementList { line: usize, message: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn list(faults: &[Fault]) -> String {
    faults
        .iter()
        .map(|f| f.code.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// All faults of `raw`; empty iff it binds.
pub fn validate(raw: &RawSentence) -> Vec<Fault> {
    analyze(raw).err().unwrap_or_default()
}

fn swap_patterns() -> &'static [(Regex, &'static str); 2] {
    static PATTERNS: OnceLock<[(Regex, &'static str); 2]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            (Regex::new(r"<e2>(\s*)</e1>").unwrap(), "</e1>${1}<e2>"),
            (Regex::new(r"<e1>(\s*)</e2>").unwrap(), "</e2>${1}<e1>"),
        ]
    })
}

/// Rewrites `<e2></e1>` to `</e1><e2>` and `<e1></e2>` to `</e2><e1>`,
/// keeping any whitespace between the two tags.
///
/// Returns the sentence unchanged when the pattern is absent. Fails with
/// the blocking faults when the input has multiple-tag faults or when the
/// rewritten text still has tag faults (label faults are not considered).
pub fn repair_swap(raw: &RawSentence) -> Result<RawSentence, Vec<Fault>> {
    let before = validate(raw);
    if !before
        .iter()
        .any(|f| f.code == FaultCode::AdjacentSwappedClose)
    {
        return Ok(raw.clone());
    }
    let multiple: Vec<Fault> = before
        .into_iter()
        .filter(|f| matches!(f.code, FaultCode::MultipleTags(_)))
        .collect();
    if !multiple.is_empty() {
        return Err(multiple);
    }

    let mut text = raw.text.clone();
    for (pattern, replacement) in swap_patterns() {
        text = pattern.replace_all(&text, *replacement).into_owned();
    }
    let repaired = RawSentence {
        text,
        ..raw.clone()
    };
    let remaining: Vec<Fault> = validate(&repaired)
        .into_iter()
        .filter(|f| f.code != FaultCode::UnknownLabel)
        .collect();
    if remaining.is_empty() {
        Ok(repaired)
    } else {
        Err(vec![Fault {
            id: raw.id,
            code: FaultCode::InterleavedSpans,
            detail: format!("swap rewrite leaves {}", list(&remaining)),
        }])
    }
}

/// Curated corrections: sentence id to replacement tagged text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementList {
    texts: BTreeMap<SentenceId, String>,
}

#[derive(Deserialize)]
struct ReplacementRecord {
    id: SentenceId,
    text: String,
}

impl ReplacementList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: SentenceId, text: impl Into<String>) -> Option<String> {
        self.texts.insert(id, text.into())
    }

    pub fn get(&self, id: SentenceId) -> Option<&str> {
        self.texts.get(&id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    /// Reads JSONL records `{"id": …, "text": …}`. A repeated id is an error.
    pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Self, RepairError> {
        let mut out = ReplacementList::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| RepairError::ReplacementList {
                line: i + 1,
                message,
            };
            let record: ReplacementRecord =
                serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
            if out.insert(record.id, record.text).is_some() {
                return Err(err(format!("duplicate id {}", record.id)));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Fix {
    SwappedClose,
}

/// What happened to one input sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fate", rename_all = "lowercase")]
pub enum Fate {
    Kept,
    Repaired { fixes: Vec<Fix> },
    Removed { faults: Vec<Fault> },
    Replaced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEntry {
    pub id: SentenceId,
    #[serde(flatten)]
    pub fate: Fate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FateCounts {
    pub kept: usize,
    pub repaired: usize,
    pub removed: usize,
    pub replaced: usize,
}

impl FateCounts {
    pub fn total(&self) -> usize {
        self.kept + self.repaired + self.removed + self.replaced
    }

    pub fn add(&mut self, other: &FateCounts) {
        self.kept += other.kept;
        self.repaired += other.repaired;
        self.removed += other.removed;
        self.replaced += other.replaced;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub counts: FateCounts,
    /// Removed sentences per fault kind; a sentence counts once per kind.
    pub removed_by_fault: BTreeMap<String, usize>,
    /// Repaired sentences per fault kind they were repaired for.
    pub repaired_by_fault: BTreeMap<String, usize>,
    /// Replacement ids that matched no input sentence.
    pub unused_replacements: Vec<SentenceId>,
    pub entries: Vec<RepairEntry>,
}

impl RepairReport {
    fn record(&mut self, id: SentenceId, fate: Fate) {
        match &fate {
            Fate::Kept => self.counts.kept += 1,
            Fate::Replaced => self.counts.replaced += 1,
            Fate::Repaired { .. } => {
                self.counts.repaired += 1;
                *self
                    .repaired_by_fault
                    .entry(FaultCode::AdjacentSwappedClose.kind().to_string())
                    .or_default() += 1;
            }
            Fate::Removed { faults } => {
                self.counts.removed += 1;
                let mut kinds: Vec<&str> = faults.iter().map(|f| f.code.kind()).collect();
                kinds.sort_unstable();
                kinds.dedup();
                for kind in kinds {
                    *self.removed_by_fault.entry(kind.to_string()).or_default() += 1;
                }
            }
        }
        self.entries.push(RepairEntry { id, fate });
    }

    pub fn removed_for(&self, kind: &str) -> usize {
        self.removed_by_fault.get(kind).copied().unwrap_or(0)
    }

    pub fn repaired_for(&self, kind: &str) -> usize {
        self.repaired_by_fault.get(kind).copied().unwrap_or(0)
    }
}

impl fmt::Display for RepairReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(
            f,
            "input {}: kept {}, repaired {}, replaced {}, removed {}",
            c.total(),
            c.kept,
            c.repaired,
            c.replaced,
            c.removed
        )?;
        for (kind, n) in &self.repaired_by_fault {
            writeln!(f, "  repaired {kind}: {n}")?;
        }
        for (kind, n) in &self.removed_by_fault {
            writeln!(f, "  removed {kind}: {n}")?;
        }
        if !self.unused_replacements.is_empty() {
            writeln!(
                f,
                "  unused replacements: {}",
                self.unused_replacements.len()
            )?;
        }
        Ok(())
    }
}

fn decide(raw: &RawSentence) -> (Fate, Option<TaggedSentence>) {
    let faults = match analyze(raw) {
        Ok(s) => return (Fate::Kept, Some(s)),
        Err(faults) => faults,
    };
    let swappable = faults
        .iter()
        .any(|f| f.code == FaultCode::AdjacentSwappedClose)
        && !faults
            .iter()
            .any(|f| matches!(f.code, FaultCode::MultipleTags(_)));
    if !swappable {
        return (Fate::Removed { faults }, None);
    }
    match repair_swap(raw) {
        Ok(fixed) => match analyze(&fixed) {
            Ok(s) => (
                Fate::Repaired {
                    fixes: vec![Fix::SwappedClose],
                },
                Some(s),
            ),
            Err(faults) => (Fate::Removed { faults }, None),
        },
        Err(faults) => (Fate::Removed { faults }, None),
    }
}

/// Runs replacement, swap repair and filtering over a raw corpus.
///
/// The output keeps input order and source ids. A replacement text that does
/// not validate is a hard error.
pub fn run_repair(
    corpus: &Corpus<RawSentence>,
    replacements: &ReplacementList,
) -> Result<(Corpus<TaggedSentence>, RepairReport), RepairError> {
    let mut report = RepairReport::default();
    let mut kept = Vec::with_capacity(corpus.len());
    for raw in corpus {
        let (fate, sentence) = match replacements.get(raw.id) {
            Some(text) => {
                let replaced = RawSentence {
                    text: text.to_string(),
                    ..raw.clone()
                };
                let s = analyze(&replaced)
                    .map_err(|faults| RepairError::InvalidReplacement { id: raw.id, faults })?;
                (Fate::Replaced, Some(s))
            }
            None => decide(raw),
        };
        report.record(raw.id, fate);
        kept.extend(sentence);
    }
    let ids: BTreeSet<SentenceId> = corpus.iter().map(|s| s.id).collect();
    report.unused_replacements = replacements
        .texts
        .keys()
        .copied()
        .filter(|id| !ids.contains(id))
        .collect();
    let out = Corpus::new(
        kept,
        CorpusMeta {
            source: corpus.meta.source.clone(),
            stage: Stage::Repaired,
        },
    )?;
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(id: u64, text: &str) -> RawSentence {
        RawSentence {
            id,
            text: text.to_string(),
            label: "Cause-Effect(e1,e2)".to_string(),
            comment: None,
        }
    }

    #[test]
    fn swap_example_rewrites_only_tags() {
        let s = raw(1, "u <e1>w x <e2></e1> y z</e2> v");
        let fixed = repair_swap(&s).unwrap();
        assert_eq!(fixed.text, "u <e1>w x </e1><e2> y z</e2> v");
        assert!(validate(&fixed).is_empty());
    }

    #[test]
    fn swap_keeps_inner_whitespace_and_handles_mirror_pattern() {
        let fixed = repair_swap(&raw(1, "<e2>p <e1>  </e2>q</e1>")).unwrap();
        assert_eq!(fixed.text, "<e2>p </e2>  <e1>q</e1>");
        assert!(validate(&fixed).is_empty());
    }

    #[test]
    fn swap_is_identity_without_pattern_and_idempotent() {
        let clean = raw(1, "<e1>a</e1> b <e2>c</e2>");
        assert_eq!(repair_swap(&clean).unwrap(), clean);
        let s = raw(2, "u <e1>w x <e2></e1> y z</e2> v");
        let once = repair_swap(&s).unwrap();
        assert_eq!(repair_swap(&once).unwrap(), once);
    }

    #[test]
    fn swap_refuses_multiple_tags_and_pathological_nesting() {
        let multi = raw(1, "<e1>a <e2></e1> b</e2> <e2>c</e2>");
        let err = repair_swap(&multi).unwrap_err();
        assert!(err
            .iter()
            .all(|f| matches!(f.code, FaultCode::MultipleTags(_))));

        // </e2> before the swapped pair: rewriting cannot produce valid spans
        let nested = raw(2, "</e2> a <e1>b <e2></e1> c");
        let err = repair_swap(&nested).unwrap_err();
        assert_eq!(err.len(), 1);
        assert_eq!(err[0].code, FaultCode::InterleavedSpans);
    }

    #[test]
    fn replacements_win_and_bad_ones_are_hard_errors() {
        let corpus = Corpus::with_stage(
            vec![
                raw(1, "<e1>a</e1> <e2>b</e2> <e2>c</e2>"),
                raw(2, "<e1>a</e1> <e2>b</e2>"),
            ],
            Stage::Raw,
        )
        .unwrap();
        let mut list = ReplacementList::new();
        list.insert(1, "<e1>a</e1> and <e2>b</e2>");
        list.insert(99, "<e1>q</e1> <e2>r</e2>");
        let (out, report) = run_repair(&corpus, &list).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.sentences()[0].tokens(), ["a", "and", "b"]);
        assert_eq!(report.counts.replaced, 1);
        assert_eq!(report.counts.kept, 1);
        assert_eq!(report.unused_replacements, vec![99]);

        let mut bad = ReplacementList::new();
        bad.insert(2, "<e1>a</e1> b");
        match run_repair(&corpus, &bad).unwrap_err() {
            RepairError::InvalidReplacement { id, .. } => assert_eq!(id, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_tag_and_bad_label_are_removed() {
        let mut bad_label = raw(2, "<e1>a</e1> <e2>b</e2>");
        bad_label.label = "Cause-Effect".into();
        let corpus =
            Corpus::with_stage(vec![raw(1, "<e1>a</e1> b"), bad_label], Stage::Raw).unwrap();
        let (out, report) = run_repair(&corpus, &ReplacementList::new()).unwrap();
        assert!(out.is_empty());
        assert_eq!(report.counts.removed, 2);
        assert_eq!(report.removed_for("MissingTag"), 1);
        assert_eq!(report.removed_for("UnknownLabel"), 1);
    }

    #[test]
    fn replacement_list_reader_reports_lines() {
        let ok = "{\"id\":3,\"text\":\"<e1>a</e1> <e2>b</e2>\"}\n\n{\"id\":4,\"text\":\"x\"}\n";
        let list = ReplacementList::read_jsonl(ok.as_bytes()).unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list.get(4), Some("x"));
        let dup = "{\"id\":3,\"text\":\"a\"}\n{\"id\":3,\"text\":\"b\"}\n";
        assert!(matches!(
            ReplacementList::read_jsonl(dup.as_bytes()),
            Err(RepairError::ReplacementList { line: 2, .. })
        ));
    }

    #[test]
    fn report_serializes_fates_by_id() {
        let mut report = RepairReport::default();
        report.record(5, Fate::Kept);
        report.record(
            6,
            Fate::Repaired {
                fixes: vec![Fix::SwappedClose],
            },
        );
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["entries"][0]["fate"], "kept");
        assert_eq!(json["entries"][1]["id"], 6);
        assert_eq!(json["entries"][1]["fixes"][0], "SwappedClose");
        assert_eq!(json["repaired_by_fault"]["AdjacentSwappedClose"], 1);
    }
}
