//! Scoring relation predictions under three label regimes.
//!
//! - `Way18`: each directed label is its own class.
//! - `Way9Directed`: one class per relation type; a prediction is a true
//!   positive only if type and direction both match, while the precision
//!   and recall denominators count the type in either direction. This is
//!   the official SemEval-2010 Task 8 convention.
//! - `Way9Undirected`: one class per relation type, direction ignored.
//!
//! `Other` takes part in the confusion matrix and in the false positives and
//! false negatives of the other classes, but is never averaged.
//! Zero denominators yield 0, not NaN.

mod io;
mod oracle;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{RelationLabel, RelationType, SentenceId};

pub use io::{read_prediction_jsonl, read_prediction_tsv};
pub use oracle::oracle_score;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("prediction set is empty")]
    Empty,
    #[error("duplicate prediction id {0}")]
    DuplicateId(SentenceId),
    #[error("sentence {id}: unknown label {label:?}")]
    UnknownLabel { id: SentenceId, label: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no prediction for gold sentence {0}")]
    MissingPrediction(SentenceId),
    #[error("prediction for unknown sentence {0}")]
    UnknownId(SentenceId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: SentenceId,
    pub gold: RelationLabel,
    pub pred: RelationLabel,
}

/// Gold/predicted label pairs with unique ids; never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    rows: Vec<Prediction>,
}

impl PredictionSet {
    pub fn new(rows: Vec<Prediction>) -> Result<Self, ScoreError> {
        if rows.is_empty() {
            return Err(ScoreError::Empty);
        }
        let mut seen = BTreeSet::new();
        for r in &rows {
            if !seen.insert(r.id) {
                return Err(ScoreError::DuplicateId(r.id));
            }
        }
        Ok(PredictionSet { rows })
    }

    /// Parses canonical label strings, failing with the offending id.
    pub fn from_strings<'a>(
        rows: impl IntoIterator<Item = (SentenceId, &'a str, &'a str)>,
    ) -> Result<Self, ScoreError> {
        let parse = |id, label: &str| {
            label
                .parse::<RelationLabel>()
                .map_err(|_| ScoreError::UnknownLabel {
                    id,
                    label: label.to_string(),
                })
        };
        let rows = rows
            .into_iter()
            .map(|(id, gold, pred)| {
                Ok(Prediction {
                    id,
                    gold: parse(id, gold)?,
                    pred: parse(id, pred)?,
                })
            })
            .collect::<Result<Vec<_>, ScoreError>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Prediction] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Way18,
    Way9Directed,
    Way9Undirected,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Way18, Scheme::Way9Directed, Scheme::Way9Undirected];

    /// Non-Other class names in report order.
    pub fn class_names(&self) -> Vec<String> {
        match self {
            Scheme::Way18 => RelationLabel::all()
                .into_iter()
                .filter(|l| !l.is_other())
                .map(|l| l.to_string())
                .collect(),
            _ => RelationType::ALL.iter().map(|t| t.to_string()).collect(),
        }
    }

    /// Class index of `label`; `Other` maps to the last index.
    fn bucket(&self, label: &RelationLabel) -> usize {
        let other = self.class_count();
        match (self, label) {
            (_, RelationLabel::Other) => other,
            (Scheme::Way18, RelationLabel::Directed { kind, direction }) => {
                type_index(*kind) * 2 + *direction as usize
            }
            (_, RelationLabel::Directed { kind, .. }) => type_index(*kind),
        }
    }

    fn class_count(&self) -> usize {
        match self {
            Scheme::Way18 => 18,
            _ => 9,
        }
    }

    fn is_hit(&self, gold: &RelationLabel, pred: &RelationLabel) -> bool {
        match self {
            Scheme::Way9Undirected => self.bucket(gold) == self.bucket(pred),
            _ => gold == pred,
        }
    }
}

fn type_index(kind: RelationType) -> usize {
    RelationType::ALL
        .iter()
        .position(|t| *t == kind)
        .expect("closed enum")
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Way18 => "18-way (directed labels)",
            Scheme::Way9Directed => "(9+1)-way, direction required",
            Scheme::Way9Undirected => "(9+1)-way, direction ignored",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Regime {
    pub scheme: Scheme,
    pub averaging: Averaging,
    /// Average over every non-Other class, present or not.
    pub include_empty_classes: bool,
}

impl Regime {
    pub fn new(scheme: Scheme, averaging: Averaging) -> Self {
        Regime {
            scheme,
            averaging,
            include_empty_classes: false,
        }
    }

    /// The official SemEval-2010 Task 8 metric.
    pub fn official() -> Self {
        Regime::new(Scheme::Way9Directed, Averaging::Macro)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(tp: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, gold);
        Prf {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub tp: usize,
    pub gold: usize,
    pub predicted: usize,
    #[serde(flatten)]
    pub prf: Prf,
    /// Whether this class enters the macro average.
    pub averaged: bool,
}

/// `counts[g][p]`: rows are gold classes, columns predicted, `Other` last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn row_sum(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub regime: Regime,
    pub total: usize,
    /// Per-class scores, non-Other classes first, `Other` last (scored as an
    /// ordinary class for diagnostics, never averaged).
    pub classes: Vec<ClassScore>,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    /// F1 under the regime's averaging.
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    /// Set when no non-Other class was present; averages are then 0.
    pub empty_class_set: bool,
}

impl ScoreReport {
    pub fn class(&self, name: &str) -> Option<&ClassScore> {
        self.classes.iter().find(|c| c.class == name)
    }

    /// Plain-text table of per-class and aggregate scores.
    pub fn to_table(&self) -> String {
        let width = self
            .classes
            .iter()
            .map(|c| c.class.len())
            .max()
            .unwrap_or(5)
            .max("MACRO".len());
        let mut out = format!(
            "{}\n{:<width$}  {:>6}  {:>6}  {:>6}  {:>5}  {:>5}  {:>5}\n",
            self.regime.scheme, "class", "P", "R", "F1", "tp", "gold", "pred"
        );
        for c in &self.classes {
            out.push_str(&format!(
                "{:<width$}  {:>6.4}  {:>6.4}  {:>6.4}  {:>5}  {:>5}  {:>5}{}\n",
                c.class,
                c.prf.precision,
                c.prf.recall,
                c.prf.f1,
                c.tp,
                c.gold,
                c.predicted,
                if c.averaged { "" } else { "  (not averaged)" }
            ));
        }
        for (name, prf) in [("MICRO", &self.micro), ("MACRO", &self.macro_avg)] {
            out.push_str(&format!(
                "{:<width$}  {:>6.4}  {:>6.4}  {:>6.4}\n",
                name, prf.precision, prf.recall, prf.f1
            ));
        }
        if self.empty_class_set {
            out.push_str("warning: no non-Other class present; averages reported as 0\n");
        }
        out
    }
}

/// Scores `preds` in one pass over the rows.
pub fn score(preds: &PredictionSet, regime: Regime) -> ScoreReport {
    let scheme = regime.scheme;
    let n = scheme.class_count();
    let mut confusion = vec![vec![0usize; n + 1]; n + 1];
    let mut hits = vec![0usize; n + 1];
    for row in preds.rows() {
        let (g, p) = (scheme.bucket(&row.gold), scheme.bucket(&row.pred));
        confusion[g][p] += 1;
        if scheme.is_hit(&row.gold, &row.pred) {
            hits[g] += 1;
        }
    }

    let mut labels = scheme.class_names();
    labels.push(RelationLabel::OTHER_STR.to_string());
    let mut classes = Vec::with_capacity(n + 1);
    for (c, name) in labels.iter().enumerate() {
        let gold: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|r| r[c]).sum();
        let present = gold > 0 || predicted > 0;
        classes.push(ClassScore {
            class: name.clone(),
            tp: hits[c],
            gold,
            predicted,
            prf: Prf::from_counts(hits[c], predicted, gold),
            averaged: c < n && (present || regime.include_empty_classes),
        });
    }
    let (micro, macro_avg, empty) = aggregate(&classes[..n]);
    ScoreReport {
        regime,
        total: preds.len(),
        f1: match regime.averaging {
            Averaging::Micro => micro.f1,
            Averaging::Macro => macro_avg.f1,
        },
        classes,
        micro,
        macro_avg,
        confusion: ConfusionMatrix {
            labels,
            counts: confusion,
        },
        empty_class_set: empty,
    }
}

fn aggregate(relation_classes: &[ClassScore]) -> (Prf, Prf, bool) {
    let (tp, predicted, gold) = relation_classes.iter().fold((0, 0, 0), |(t, p, g), c| {
        (t + c.tp, p + c.predicted, g + c.gold)
    });
    let micro = Prf::from_counts(tp, predicted, gold);
    let averaged: Vec<&ClassScore> = relation_classes.iter().filter(|c| c.averaged).collect();
    if averaged.is_empty() {
        return (micro, Prf::default(), true);
    }
    let k = averaged.len() as f64;
    let mean = |f: fn(&Prf) -> f64| averaged.iter().map(|c| f(&c.prf)).sum::<f64>() / k;
    let macro_avg = Prf {
        precision: mean(|p| p.precision),
        recall: mean(|p| p.recall),
        f1: mean(|p| p.f1),
    };
    (micro, macro_avg, false)
}

/// One row per relation type plus `Other`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationRow {
    pub relation: String,
    pub gold: usize,
    pub predicted: usize,
    #[serde(flatten)]
    pub prf: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTable {
    pub rows: Vec<RelationRow>,
}

impl fmt::Display for RelationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .rows
            .iter()
            .map(|r| r.relation.len())
            .max()
            .unwrap_or(8);
        writeln!(f, "{:<width$}  {:>8}", "Relation", "F1")?;
        for row in &self.rows {
            writeln!(f, "{:<width$}  {:>7.2}%", row.relation, row.prf.f1 * 100.0)?;
        }
        Ok(())
    }
}

/// Per-type F1 under the directed (9+1)-way convention, plus `Other` scored
/// as an ordinary class.
pub fn per_relation_report(preds: &PredictionSet) -> RelationTable {
    let report = score(preds, Regime::official());
    RelationTable {
        rows: report
            .classes
            .into_iter()
            .map(|c| RelationRow {
                relation: c.class,
                gold: c.gold,
                predicted: c.predicted,
                prf: c.prf,
            })
            .collect(),
    }
}
