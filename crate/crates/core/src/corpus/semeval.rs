//! SemEval-2010 Task 8 text layout.
//!
//! ```text
//! 1<TAB>"The <e1>company</e1> fabricates plastic <e2>chairs</e2>."
//! Product-Producer(e2,e1)
//! Comment: optional
//!
//! 2<TAB>"..."
//! ```

use super::{Corpus, CorpusError, CorpusMeta, RawSentence, Stage};

/// Parses SemEval-formatted text into raw sentences, tags untouched.
///
/// Records are separated by blank lines. The `Comment:` line is optional.
/// Both LF and CRLF line endings are accepted.
pub fn parse_semeval_file(text: &str) -> Result<Corpus<RawSentence>, CorpusError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut records: Vec<Vec<&str>> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    for line in text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                records.push(std::mem::take(&mut current));
            }
        } else {
            current.push(line);
        }
    }
    if !current.is_empty() {
        records.push(current);
    }

    let sentences = records
        .iter()
        .enumerate()
        .map(|(i, lines)| parse_record(i + 1, lines))
        .collect::<Result<Vec<_>, _>>()?;
    Corpus::new(
        sentences,
        CorpusMeta {
            source: None,
            stage: Stage::Raw,
        },
    )
}

fn parse_record(record: usize, lines: &[&str]) -> Result<RawSentence, CorpusError> {
    let malformed = |message: String| CorpusError::MalformedRecord { record, message };

    let head = lines[0];
    let split = head
        .find(['\t', ' '])
        .ok_or_else(|| malformed("expected `<id><TAB>\"<sentence>\"`".to_string()))?;
    let (id_str, rest) = head.split_at(split);
    let id = id_str.trim().parse::<u64>().map_err(|_| {
        malformed(format!(
            "missing or invalid sentence id {:?}",
            id_str.trim()
        ))
    })?;
    let quoted = rest.trim();
    let text = quoted
        .strip_prefix('"')
        .and_then(|q| q.strip_suffix('"'))
        .ok_or_else(|| malformed("sentence text is not enclosed in double quotes".to_string()))?;
    if text.trim().is_empty() {
        return Err(malformed("empty sentence text".to_string()));
    }

    let label = lines
        .get(1)
        .map(|l| l.trim().to_string())
        .ok_or_else(|| malformed("missing relation label line".to_string()))?;

    let comment = match lines.get(2) {
        None => None,
        Some(line) => {
            let body = line
                .trim_start()
                .strip_prefix("Comment:")
                .ok_or_else(|| malformed(format!("unexpected line {line:?}")))?;
            Some(body.trim().to_string())
        }
    };
    if lines.len() > 3 {
        return Err(malformed(format!("unexpected line {:?}", lines[3])));
    }

    Ok(RawSentence {
        id,
        text: text.to_string(),
        label,
        comment,
    })
}

/// Writes raw sentences in the SemEval layout `parse_semeval_file` reads.
pub fn write_semeval<'a>(sentences: impl IntoIterator<Item = &'a RawSentence>) -> String {
    let mut out = String::new();
    for s in sentences {
        out.push_str(&format!("{}\t\"{}\"\n{}\n", s.id, s.text, s.label));
        if let Some(comment) = &s.comment {
            if comment.is_empty() {
                out.push_str("Comment:\n");
            } else {
                out.push_str(&format!("Comment: {comment}\n"));
            }
        }
        out.push('\n');
    }
    out
}
