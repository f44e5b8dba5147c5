use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntitySpan, SentenceId, TaggedSentence};

pub const CLS: &str = "[CLS]";
pub const E1_MARKER: &str = "$";
pub const E2_MARKER: &str = "#";
/// Default export length, counted in marker-inserted whitespace tokens.
pub const DEFAULT_MAX_TOKENS: usize = 128;

struct Marked {
    tokens: Vec<String>,
    e1: EntitySpan,
    e2: EntitySpan,
    last_marker: usize,
}

fn mark(s: &TaggedSentence) -> Marked {
    let (e1, e2) = (s.e1(), s.e2());
    let mut tokens = Vec::with_capacity(s.tokens().len() + 5);
    tokens.push(CLS.to_string());
    let (mut m1, mut m2) = (0, 0);
    for (i, token) in s.tokens().iter().enumerate() {
        if i == e1.start {
            tokens.push(E1_MARKER.to_string());
            m1 = tokens.len();
        }
        if i == e2.start {
            tokens.push(E2_MARKER.to_string());
            m2 = tokens.len();
        }
        tokens.push(token.clone());
        if i == e1.end {
            tokens.push(E1_MARKER.to_string());
        }
        if i == e2.end {
            tokens.push(E2_MARKER.to_string());
        }
    }
    let e1 = EntitySpan::new(m1, m1 + e1.len() - 1);
    let e2 = EntitySpan::new(m2, m2 + e2.len() - 1);
    let last_marker = e1.end.max(e2.end) + 1;
    Marked {
        tokens,
        e1,
        e2,
        last_marker,
    }
}

/// `[CLS]`, then the tokens with `$` around e1 and `#` around e2.
pub fn marker_tokens(s: &TaggedSentence) -> Vec<String> {
    mark(s).tokens
}

pub fn insert_markers(s: &TaggedSentence) -> String {
    marker_tokens(s).join(" ")
}

/// Positions of the entity tokens (markers excluded) in the marked sequence;
/// these index rows of an embedding matrix for that sequence.
pub fn marked_spans(s: &TaggedSentence) -> (EntitySpan, EntitySpan) {
    let m = mark(s);
    (m.e1, m.e2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: SentenceId,
    pub text: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub id: SentenceId,
    pub reason: String,
    /// Marker-inserted length of the sentence.
    pub token_count: usize,
    /// Tokens needed to keep both marked entities whole.
    pub required: usize,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportOutcome {
    pub records: Vec<ExportRecord>,
    pub rejects: Vec<RejectRecord>,
    pub truncated: usize,
}

/// Marker text for every sentence, truncated to `max_tokens` when given.
///
/// Truncation drops trailing tokens only. A sentence whose closing entity
/// marker would fall past the limit goes to `rejects` instead.
pub fn export_marked(corpus: &Corpus<TaggedSentence>, max_tokens: Option<usize>) -> ExportOutcome {
    let mut out = ExportOutcome::default();
    for s in corpus {
        let mut m = mark(s);
        if let Some(max) = max_tokens {
            if m.tokens.len() > max {
                if m.last_marker >= max {
                    out.rejects.push(RejectRecord {
                        id: s.id,
                        reason: "entity would be cut by truncation".to_string(),
                        token_count: m.tokens.len(),
                        required: m.last_marker + 1,
                        max_tokens: max,
                    });
                    continue;
                }
                m.tokens.truncate(max);
                out.truncated += 1;
            }
        }
        out.records.push(ExportRecord {
            id: s.id,
            text: m.tokens.join(" "),
            label: s.label.to_string(),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize_and_bind, RawSentence, Stage};

    fn bind(id: u64, text: &str) -> TaggedSentence {
        tokenize_and_bind(&RawSentence {
            id,
            text: text.into(),
            label: "Product-Producer(e2,e1)".into(),
            comment: None,
        })
        .unwrap()
    }

    #[test]
    fn company_chairs_sentence() {
        let s = bind(
            1,
            "The <e1>company</e1> fabricates plastic <e2>chairs</e2>.",
        );
        assert_eq!(
            insert_markers(&s),
            "[CLS] The $ company $ fabricates plastic # chairs # ."
        );
        assert_eq!(
            marked_spans(&s),
            (EntitySpan::new(3, 3), EntitySpan::new(8, 8))
        );
    }

    #[test]
    fn minimal_and_reversed_order() {
        assert_eq!(
            insert_markers(&bind(1, "<e1>a</e1> <e2>b</e2>")),
            "[CLS] $ a $ # b #"
        );
        let s = bind(2, "x <e2>p q</e2> <e1>r</e1>");
        assert_eq!(insert_markers(&s), "[CLS] x # p q # $ r $");
        assert_eq!(
            marked_spans(&s),
            (EntitySpan::new(7, 7), EntitySpan::new(3, 4))
        );
    }

    #[test]
    fn truncation_keeps_entities_or_rejects() {
        let early = bind(1, "<e1>a</e1> <e2>b</e2> c d e f g h");
        let late = bind(2, "c d e f g <e1>a</e1> <e2>b</e2> h");
        let corpus = Corpus::with_stage(vec![early, late], Stage::Repaired).unwrap();
        // early: [CLS] $ a $ # b # c d e f g h (13 tokens, last marker at 6)
        let out = export_marked(&corpus, Some(8));
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].text, "[CLS] $ a $ # b # c");
        assert_eq!(out.truncated, 1);
        assert_eq!(out.rejects.len(), 1);
        assert_eq!(out.rejects[0].id, 2);
        assert_eq!(out.rejects[0].required, 12);

        let full = export_marked(&corpus, None);
        assert_eq!(full.records.len(), 2);
        assert!(full.rejects.is_empty());
        let exact = export_marked(&corpus, Some(12));
        assert_eq!(exact.records.len(), 2);
        assert_eq!(exact.records[1].text.split(' ').count(), 12);
    }
}
