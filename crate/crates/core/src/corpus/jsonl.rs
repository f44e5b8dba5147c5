use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    Corpus, CorpusError, CorpusMeta, EntitySpan, Provenance, RelationLabel, SentenceId, Stage,
    TaggedSentence,
};

#[derive(Serialize, Deserialize)]
struct Record {
    id: SentenceId,
    tokens: Vec<String>,
    e1: EntitySpan,
    e2: EntitySpan,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

/// Reads one tagged sentence per line. Blank lines are skipped; line numbers
/// in errors are 1-based physical lines.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Corpus<TaggedSentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut stage = Stage::Raw;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CorpusError::Jsonl {
            line: i + 1,
            message,
        };
        let record: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let label: RelationLabel = record
            .label
            .parse()
            .map_err(|e: CorpusError| err(e.to_string()))?;
        let sentence = TaggedSentence::new(record.id, record.tokens, record.e1, record.e2, label)
            .map_err(|e| err(e.to_string()))?
            .with_comment(record.comment)
            .with_provenance(record.provenance);
        if sentence.provenance.is_some_and(|p| p != Provenance::Orig) {
            stage = Stage::Augmented;
        }
        sentences.push(sentence);
    }
    Corpus::new(
        sentences,
        CorpusMeta {
            source: None,
            stage,
        },
    )
}

/// Writes a single sentence as one JSON line.
pub fn write_jsonl_record<W: Write>(mut writer: W, s: &TaggedSentence) -> std::io::Result<()> {
    let record = Record {
        id: s.id,
        tokens: s.tokens().to_vec(),
        e1: s.e1(),
        e2: s.e2(),
        label: s.label.to_string(),
        comment: s.comment.clone(),
        provenance: s.provenance,
    };
    serde_json::to_writer(&mut writer, &record)?;
    writer.write_all(b"\n")
}

pub fn write_jsonl<W: Write>(
    mut writer: W,
    corpus: &Corpus<TaggedSentence>,
) -> std::io::Result<()> {
    for s in corpus {
        write_jsonl_record(&mut writer, s)?;
    }
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_semeval_file, RawSentence};

    fn sample(ids: &[u64]) -> Corpus<TaggedSentence> {
        let sentences = ids
            .iter()
            .enumerate()
            .map(|(i, &id)| {
                let raw = RawSentence {
                    id,
                    text: format!("w{i} <e1>a b</e1> x <e2>c</e2> ."),
                    label: if i % 2 == 0 {
                        "Other".into()
                    } else {
                        "Cause-Effect(e2,e1)".into()
                    },
                    comment: (i % 3 == 0).then(|| format!("note {i}")),
                };
                crate::corpus::tokenize_and_bind(&raw)
                    .unwrap()
                    .with_provenance((i == 4).then_some(Provenance::Orig))
            })
            .collect();
        Corpus::with_stage(sentences, Stage::Repaired).unwrap()
    }

    #[test]
    fn ten_sentences_round_trip_with_sparse_ids() {
        let corpus = sample(&[1, 2, 3, 10, 11, 500, 7, 8, 9_000_000_000, 0]);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &corpus).unwrap();
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back.sentences(), corpus.sentences());
        let ids: Vec<u64> = back.iter().map(|s| s.id).collect();
        assert_eq!(ids, vec![1, 2, 3, 10, 11, 500, 7, 8, 9_000_000_000, 0]);
    }

    #[test]
    fn missing_label_reports_line_number() {
        let text = concat!(
            r#"{"id":1,"tokens":["a","b"],"e1":{"start":0,"end":0},"e2":{"start":1,"end":1},"label":"Other"}"#,
            "\n\n",
            r#"{"id":2,"tokens":["a","b"],"e1":{"start":0,"end":0},"e2":{"start":1,"end":1}}"#,
            "\n"
        );
        match read_jsonl(text.as_bytes()).unwrap_err() {
            CorpusError::Jsonl { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("label"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_spans_and_labels_are_schema_errors() {
        let overlap = r#"{"id":1,"tokens":["a","b"],"e1":{"start":0,"end":1},"e2":{"start":1,"end":1},"label":"Other"}"#;
        assert!(matches!(
            read_jsonl(overlap.as_bytes()),
            Err(CorpusError::Jsonl { line: 1, .. })
        ));
        let label = r#"{"id":1,"tokens":["a","b"],"e1":{"start":0,"end":0},"e2":{"start":1,"end":1},"label":"Nope"}"#;
        assert!(matches!(
            read_jsonl(label.as_bytes()),
            Err(CorpusError::Jsonl { line: 1, .. })
        ));
    }

    #[test]
    fn semeval_to_jsonl_keeps_source_ids() {
        let raw = parse_semeval_file("42\t\"<e1>a</e1> <e2>b</e2>\"\nOther\n").unwrap();
        let tagged = raw.bind_all().unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &tagged).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"id\":42,\"tokens\":[\"a\",\"b\"],\"e1\":{\"start\":0,\"end\":0},\"e2\":{\"start\":1,\"end\":1},\"label\":\"Other\"}\n"
        );
    }
}
