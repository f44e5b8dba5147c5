use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use super::{Prediction, PredictionSet, ScoreError};
use crate::corpus::{Corpus, RelationLabel, SentenceId, TaggedSentence};

fn parse_label(id: SentenceId, label: &str) -> Result<RelationLabel, ScoreError> {
    label.parse().map_err(|_| ScoreError::UnknownLabel {
        id,
        label: label.to_string(),
    })
}

/// Pairs `id<TAB>label` predictions with the labels of a gold corpus.
///
/// Every gold sentence needs exactly one prediction; blank lines are skipped.
pub fn read_prediction_tsv<R: BufRead>(
    gold: &Corpus<TaggedSentence>,
    reader: R,
) -> Result<PredictionSet, ScoreError> {
    let gold_labels: BTreeMap<SentenceId, RelationLabel> =
        gold.iter().map(|s| (s.id, s.label)).collect();
    let mut predicted: BTreeMap<SentenceId, RelationLabel> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| ScoreError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .or_else(|| line.split_once(char::is_whitespace))
            .ok_or_else(|| ScoreError::Parse {
                line: line_no,
                message: "expected `id<TAB>label`".to_string(),
            })?;
        let id: SentenceId = id.trim().parse().map_err(|_| ScoreError::Parse {
            line: line_no,
            message: format!("invalid sentence id {:?}", id.trim()),
        })?;
        if !gold_labels.contains_key(&id) {
            return Err(ScoreError::UnknownId(id));
        }
        let label = parse_label(id, label.trim())?;
        if predicted.insert(id, label).is_some() {
            return Err(ScoreError::DuplicateId(id));
        }
    }
    let rows = gold
        .iter()
        .map(|s| {
            predicted
                .get(&s.id)
                .map(|pred| Prediction {
                    id: s.id,
                    gold: s.label,
                    pred: *pred,
                })
                .ok_or(ScoreError::MissingPrediction(s.id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    PredictionSet::new(rows)
}

#[derive(Deserialize)]
struct PredictionRecord {
    id: SentenceId,
    gold: String,
    pred: String,
}

/// Reads self-contained `{"id", "gold", "pred"}` JSONL records.
pub fn read_prediction_jsonl<R: BufRead>(reader: R) -> Result<PredictionSet, ScoreError> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let parse_err = |message: String| ScoreError::Parse {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        rows.push(Prediction {
            id: rec.id,
            gold: parse_label(rec.id, &rec.gold)?,
            pred: parse_label(rec.id, &rec.pred)?,
        });
    }
    PredictionSet::new(rows)
}
