//! Tag grammar: fault detection, binding tags to token spans, rendering.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CorpusError, EntitySpan, RawSentence, RelationLabel, SentenceId, TaggedSentence};

/// One of the four inline entity tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TagLiteral {
    E1Open,
    E1Close,
    E2Open,
    E2Close,
}

impl TagLiteral {
    pub const ALL: [TagLiteral; 4] = [
        TagLiteral::E1Open,
        TagLiteral::E1Close,
        TagLiteral::E2Open,
        TagLiteral::E2Close,
    ];

    pub fn literal(self) -> &'static str {
        match self {
            TagLiteral::E1Open => "<e1>",
            TagLiteral::E1Close => "</e1>",
            TagLiteral::E2Open => "<e2>",
            TagLiteral::E2Close => "</e2>",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TagLiteral::E1Open => "e1-open",
            TagLiteral::E1Close => "e1-close",
            TagLiteral::E2Open => "e2-open",
            TagLiteral::E2Close => "e2-close",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        TagLiteral::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Earliest tag literal occurring in `text`, with its byte offset.
    pub fn find_in(text: &str) -> Option<(usize, TagLiteral)> {
        let bytes = text.as_bytes();
        let mut from = 0;
        while let Some(rel) = text[from..].find('<') {
            let at = from + rel;
            for tag in TagLiteral::ALL {
                if bytes[at..].starts_with(tag.literal().as_bytes()) {
                    return Some((at, tag));
                }
            }
            from = at + 1;
        }
        None
    }
}

impl fmt::Display for TagLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed set of tag/label faults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultCode {
    MultipleTags(TagLiteral),
    AdjacentSwappedClose,
    MissingTag(TagLiteral),
    InterleavedSpans,
    UnknownLabel,
}

impl FaultCode {
    /// Code name without the tag argument.
    pub fn kind(&self) -> &'static str {
        match self {
            FaultCode::MultipleTags(_) => "MultipleTags",
            FaultCode::AdjacentSwappedClose => "AdjacentSwappedClose",
            FaultCode::MissingTag(_) => "MissingTag",
            FaultCode::InterleavedSpans => "InterleavedSpans",
            FaultCode::UnknownLabel => "UnknownLabel",
        }
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultCode::MultipleTags(t) | FaultCode::MissingTag(t) => {
                write!(f, "{}({})", self.kind(), t)
            }
            _ => f.write_str(self.kind()),
        }
    }
}

impl std::str::FromStr for FaultCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let with_tag = |prefix: &str| {
            s.strip_prefix(prefix)
                .and_then(|rest| rest.strip_prefix('('))
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(TagLiteral::from_name)
        };
        match s {
            "AdjacentSwappedClose" => Ok(FaultCode::AdjacentSwappedClose),
            "InterleavedSpans" => Ok(FaultCode::InterleavedSpans),
            "UnknownLabel" => Ok(FaultCode::UnknownLabel),
            _ => with_tag("MultipleTags")
                .map(FaultCode::MultipleTags)
                .or_else(|| with_tag("MissingTag").map(FaultCode::MissingTag))
                .ok_or_else(|| format!("unknown fault code {s:?}")),
        }
    }
}

impl Serialize for FaultCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FaultCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fault {
    pub id: SentenceId,
    pub code: FaultCode,
    pub detail: String,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sentence {}: {} ({})", self.id, self.code, self.detail)
    }
}

enum Piece<'a> {
    Tag(TagLiteral),
    Text(&'a str),
}

fn pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some((at, tag)) = TagLiteral::find_in(rest) {
        if at > 0 {
            out.push(Piece::Text(&rest[..at]));
        }
        out.push(Piece::Tag(tag));
        rest = &rest[at + tag.literal().len()..];
    }
    if !rest.is_empty() {
        out.push(Piece::Text(rest));
    }
    out
}

/// Validates `raw` and, when it has no faults, binds it.
///
/// Multiple-tag faults suppress the structural checks (span order, empty
/// spans), as does the adjacent swapped-close pattern, since both make span
/// boundaries meaningless until repaired.
pub fn analyze(raw: &RawSentence) -> Result<TaggedSentence, Vec<Fault>> {
    let fault = |code: FaultCode, detail: String| Fault {
        id: raw.id,
        code,
        detail,
    };
    let pieces = pieces(&raw.text);

    let mut tokens: Vec<String> = Vec::new();
    // (tag, token index at the tag, order of appearance)
    let mut positions: Vec<(TagLiteral, usize)> = Vec::new();
    let mut swapped = false;
    let mut prev_tag: Option<TagLiteral> = None;
    for piece in &pieces {
        match piece {
            Piece::Tag(tag) => {
                if matches!(
                    (prev_tag, tag),
                    (Some(TagLiteral::E2Open), TagLiteral::E1Close)
                        | (Some(TagLiteral::E1Open), TagLiteral::E2Close)
                ) {
                    swapped = true;
                }
                positions.push((*tag, tokens.len()));
                prev_tag = Some(*tag);
            }
            Piece::Text(text) => {
                if !text.trim().is_empty() {
                    prev_tag = None;
                }
                tokens.extend(text.split_whitespace().map(str::to_string));
            }
        }
    }

    let count = |tag: TagLiteral| positions.iter().filter(|(t, _)| *t == tag).count();
    let mut faults = Vec::new();
    for tag in TagLiteral::ALL {
        let n = count(tag);
        if n >= 2 {
            faults.push(fault(
                FaultCode::MultipleTags(tag),
                format!("{} occurs {n} times", tag.literal()),
            ));
        }
    }
    let multiple = !faults.is_empty();
    if swapped {
        faults.push(fault(
            FaultCode::AdjacentSwappedClose,
            "an opening tag directly precedes the other entity's closing tag".to_string(),
        ));
    }
    if !multiple {
        for tag in TagLiteral::ALL {
            if count(tag) == 0 {
                faults.push(fault(
                    FaultCode::MissingTag(tag),
                    format!("{} is absent", tag.literal()),
                ));
            }
        }
    }

    let mut spans = None;
    if faults.is_empty() {
        let order: Vec<TagLiteral> = positions.iter().map(|(t, _)| *t).collect();
        let at = |tag: TagLiteral| positions.iter().find(|(t, _)| *t == tag).map(|(_, i)| *i);
        use TagLiteral::*;
        let well_nested = order == [E1Open, E1Close, E2Open, E2Close]
            || order == [E2Open, E2Close, E1Open, E1Close];
        if !well_nested {
            let shown: Vec<&str> = order.iter().map(|t| t.literal()).collect();
            faults.push(fault(
                FaultCode::InterleavedSpans,
                format!("tag order {} is not two consecutive pairs", shown.join(" ")),
            ));
        } else {
            let (o1, c1, o2, c2) = (at(E1Open), at(E1Close), at(E2Open), at(E2Close));
            let (o1, c1, o2, c2) = (o1.unwrap(), c1.unwrap(), o2.unwrap(), c2.unwrap());
            if c1 == o1 || c2 == o2 {
                faults.push(fault(
                    FaultCode::InterleavedSpans,
                    "an entity span encloses no tokens".to_string(),
                ));
            } else {
                spans = Some((EntitySpan::new(o1, c1 - 1), EntitySpan::new(o2, c2 - 1)));
            }
        }
    }

    let label = raw.label.parse::<RelationLabel>();
    if label.is_err() {
        faults.push(fault(
            FaultCode::UnknownLabel,
            format!("label {:?} is not canonical", raw.label),
        ));
    }

    match (spans, label) {
        (Some((e1, e2)), Ok(label)) if faults.is_empty() => {
            let sentence = TaggedSentence::new(raw.id, tokens, e1, e2, label)
                .expect("tag analysis yields in-bounds disjoint spans");
            Ok(sentence.with_comment(raw.comment.clone()))
        }
        _ => Err(faults),
    }
}

/// Strips the tags from `raw` and binds them to token spans.
pub fn tokenize_and_bind(raw: &RawSentence) -> Result<TaggedSentence, CorpusError> {
    analyze(raw).map_err(|faults| CorpusError::Faults { id: raw.id, faults })
}

/// Single-space-joined tokens with the four tags reinserted around the spans.
pub fn render_tagged(s: &TaggedSentence) -> String {
    let (e1, e2) = (s.e1(), s.e2());
    let mut out = String::new();
    for (i, token) in s.tokens().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if i == e1.start {
            out.push_str(TagLiteral::E1Open.literal());
        }
        if i == e2.start {
            out.push_str(TagLiteral::E2Open.literal());
        }
        out.push_str(token);
        if i == e1.end {
            out.push_str(TagLiteral::E1Close.literal());
        }
        if i == e2.end {
            out.push_str(TagLiteral::E2Close.literal());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Direction, RelationType};

    fn raw(text: &str, label: &str) -> RawSentence {
        RawSentence {
            id: 7,
            text: text.to_string(),
            label: label.to_string(),
            comment: None,
        }
    }

    fn codes(text: &str) -> Vec<FaultCode> {
        analyze(&raw(text, "Other"))
            .err()
            .unwrap_or_default()
            .into_iter()
            .map(|f| f.code)
            .collect()
    }

    #[test]
    fn binds_entity_destination_example() {
        let s = tokenize_and_bind(&raw(
            "He has just sent <e1>spam</e1> to the <e2>clients</e2>.",
            "Entity-Destination(e1,e2)",
        ))
        .unwrap();
        assert_eq!(
            s.tokens(),
            ["He", "has", "just", "sent", "spam", "to", "the", "clients", "."]
        );
        assert_eq!(s.e1(), EntitySpan::new(4, 4));
        assert_eq!(s.e2(), EntitySpan::new(7, 7));
        assert_eq!(
            s.label,
            RelationLabel::directed(RelationType::EntityDestination, Direction::E1ToE2)
        );
        assert_eq!(
            render_tagged(&s),
            "He has just sent <e1>spam</e1> to the <e2>clients</e2> ."
        );
    }

    #[test]
    fn binds_minimal_sentence() {
        let s = tokenize_and_bind(&raw("<e1>a</e1> <e2>b</e2>", "Other")).unwrap();
        assert_eq!(s.tokens(), ["a", "b"]);
        assert_eq!(s.e1(), EntitySpan::new(0, 0));
        assert_eq!(s.e2(), EntitySpan::new(1, 1));
        assert_eq!(render_tagged(&s), "<e1>a</e1> <e2>b</e2>");
    }

    #[test]
    fn binds_e2_before_e1_and_multi_token_spans() {
        let s = tokenize_and_bind(&raw("x <e2>p q</e2> y <e1>r s t</e1>z", "Other")).unwrap();
        assert_eq!(s.tokens(), ["x", "p", "q", "y", "r", "s", "t", "z"]);
        assert_eq!(s.e2(), EntitySpan::new(1, 2));
        assert_eq!(s.e1(), EntitySpan::new(4, 6));
        assert_eq!(render_tagged(&s), "x <e2>p q</e2> y <e1>r s t</e1> z");
    }

    #[test]
    fn duplicated_open_tag_reports_multiple_tags() {
        assert_eq!(
            codes("a <e1>b</e1> <e2>c</e2> <e2>d"),
            vec![FaultCode::MultipleTags(TagLiteral::E2Open)]
        );
    }

    #[test]
    fn duplicated_e2_pair_reports_both_e2_tags() {
        let text = "I read the <e1>report</e1> from Somalia on the <e2>agreement</e2> reached by \
                    faction leaders on the form of a future government that has <e2>been</e2> \
                    warmly welcomed.";
        let faults = analyze(&raw(text, "Message-Topic(e1,e2)")).unwrap_err();
        let codes: Vec<_> = faults.iter().map(|f| f.code).collect();
        assert_eq!(
            codes,
            vec![
                FaultCode::MultipleTags(TagLiteral::E2Open),
                FaultCode::MultipleTags(TagLiteral::E2Close)
            ]
        );
        assert!(faults.iter().all(|f| f.id == 7));
    }

    #[test]
    fn swapped_close_is_detected_with_and_without_whitespace() {
        assert_eq!(
            codes("u <e1>w x <e2></e1> y z</e2> v"),
            vec![FaultCode::AdjacentSwappedClose]
        );
        assert_eq!(
            codes("u <e1>w x <e2>  </e1> y z</e2> v"),
            vec![FaultCode::AdjacentSwappedClose]
        );
        assert_eq!(
            codes("u <e2>w x <e1></e2> y z</e1> v"),
            vec![FaultCode::AdjacentSwappedClose]
        );
    }

    #[test]
    fn missing_and_interleaved_and_empty() {
        assert_eq!(
            codes("a <e1>b</e1> c"),
            vec![
                FaultCode::MissingTag(TagLiteral::E2Open),
                FaultCode::MissingTag(TagLiteral::E2Close)
            ]
        );
        assert_eq!(
            codes("<e1>a <e2>b</e1> c</e2>"),
            vec![FaultCode::InterleavedSpans]
        );
        assert_eq!(
            codes("</e1>a<e1> <e2>b</e2>"),
            vec![FaultCode::InterleavedSpans]
        );
        assert_eq!(
            codes("<e1>a<e2>b</e2></e1>"),
            vec![FaultCode::InterleavedSpans]
        );
        assert_eq!(
            codes("<e1> </e1> <e2>b</e2>"),
            vec![FaultCode::InterleavedSpans]
        );
    }

    #[test]
    fn unknown_label_is_a_fault() {
        let faults = analyze(&raw("<e1>a</e1> <e2>b</e2>", "Cause-Effect")).unwrap_err();
        assert_eq!(faults.len(), 1);
        assert_eq!(faults[0].code, FaultCode::UnknownLabel);
    }

    #[test]
    fn fault_codes_round_trip_through_strings() {
        let mut all = vec![
            FaultCode::AdjacentSwappedClose,
            FaultCode::InterleavedSpans,
            FaultCode::UnknownLabel,
        ];
        for t in TagLiteral::ALL {
            all.push(FaultCode::MultipleTags(t));
            all.push(FaultCode::MissingTag(t));
        }
        for code in all {
            assert_eq!(code.to_string().parse::<FaultCode>().unwrap(), code);
        }
        assert_eq!(
            FaultCode::MultipleTags(TagLiteral::E2Open).to_string(),
            "MultipleTags(e2-open)"
        );
    }

    #[test]
    fn lookalike_tags_are_plain_text() {
        let s = tokenize_and_bind(&raw("<e3>x <e1>a</e1> <e2>b</e2> <e1", "Other")).unwrap();
        assert_eq!(s.tokens(), ["<e3>x", "a", "b", "<e1"]);
    }
}
