//! Entity-marker text and R-BERT style representation fusion.
//!
//! The embedding matrix is the encoder output for the marker-inserted
//! sequence, with the `[CLS]` vector at row 0. Fusion stops at the combined
//! vector; activations and dense layers belong to the downstream model.

mod markers;

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntitySpan;

pub use markers::{
    export_marked, insert_markers, marked_spans, marker_tokens, ExportOutcome, ExportRecord,
    RejectRecord, CLS, DEFAULT_MAX_TOKENS, E1_MARKER, E2_MARKER,
};

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("embedding matrix needs at least one row")]
    Empty,
    #[error("row {row} has length {len}, expected {dim}")]
    Ragged { row: usize, len: usize, dim: usize },
    #[error("hidden size must be at least 1")]
    ZeroDim,
    #[error("span [{start}..{end}] outside 0..{rows}")]
    OutOfRange {
        start: usize,
        end: usize,
        rows: usize,
    },
    #[error("entity spans overlap")]
    Overlap,
    #[error("entity span covers the CLS row")]
    ClsInSpan,
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
}

/// Per-token vectors of equal length, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, FusionError> {
        let dim = rows.first().ok_or(FusionError::Empty)?.len();
        if dim == 0 {
            return Err(FusionError::ZeroDim);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != dim {
                return Err(FusionError::Ragged {
                    row,
                    len: values.len(),
                    dim,
                });
            }
            data.extend(values);
        }
        Ok(EmbeddingMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn token_count(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cls(&self) -> &[f64] {
        self.row(0)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        EmbeddingMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    fn check(&self, span: EntitySpan) -> Result<(), FusionError> {
        if span.start > span.end || span.end >= self.token_count() {
            return Err(FusionError::OutOfRange {
                start: span.start,
                end: span.end,
                rows: self.token_count(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolMode {
    Average,
    First,
    Last,
}

/// Which single token stands in for an entity in the V3 variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeToken {
    First,
    Last,
}

impl From<EdgeToken> for PoolMode {
    fn from(edge: EdgeToken) -> Self {
        match edge {
            EdgeToken::First => PoolMode::First,
            EdgeToken::Last => PoolMode::Last,
        }
    }
}

/// How CLS and the two entity representations are combined.
///
/// | strategy | vector                                   | length          |
/// |----------|------------------------------------------|-----------------|
/// | Simple   | `[cls ‖ mean(e1) ‖ mean(e2)]`            | 3h              |
/// | V1       | `(cls + mean(e1) + mean(e2)) / 3`        | h               |
/// | V2       | `[cls ‖ e1 rows… ‖ e2 rows…]`            | (1+\|e1\|+\|e2\|)h |
/// | V3(edge) | `[cls ‖ edge(e1) ‖ edge(e2)]`            | 3h              |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionStrategy {
    Simple,
    V1,
    V2,
    V3(EdgeToken),
}

impl FusionStrategy {
    pub const ALL: [FusionStrategy; 5] = [
        FusionStrategy::Simple,
        FusionStrategy::V1,
        FusionStrategy::V2,
        FusionStrategy::V3(EdgeToken::First),
        FusionStrategy::V3(EdgeToken::Last),
    ];

    /// Output length for hidden size `dim` and the given entity lengths.
    pub fn output_len(&self, dim: usize, e1_len: usize, e2_len: usize) -> usize {
        match self {
            FusionStrategy::Simple | FusionStrategy::V3(_) => 3 * dim,
            FusionStrategy::V1 => dim,
            FusionStrategy::V2 => (1 + e1_len + e2_len) * dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedRepresentation {
    pub vector: Vec<f64>,
    pub strategy: FusionStrategy,
}

/// Mean of the span rows, or the first/last row.
pub fn pool_span(
    m: &EmbeddingMatrix,
    span: EntitySpan,
    mode: PoolMode,
) -> Result<Vec<f64>, FusionError> {
    m.check(span)?;
    Ok(match mode {
        PoolMode::First => m.row(span.start).to_vec(),
        PoolMode::Last => m.row(span.end).to_vec(),
        PoolMode::Average => {
            let mut acc = vec![0.0; m.dim()];
            for i in span.indices() {
                for (a, v) in acc.iter_mut().zip(m.row(i)) {
                    *a += v;
                }
            }
            let n = span.len() as f64;
            acc.iter_mut().for_each(|a| *a /= n);
            acc
        }
    })
}

pub fn fuse(
    m: &EmbeddingMatrix,
    e1: EntitySpan,
    e2: EntitySpan,
    strategy: FusionStrategy,
) -> Result<FusedRepresentation, FusionError> {
    m.check(e1)?;
    m.check(e2)?;
    if e1.contains(0) || e2.contains(0) {
        return Err(FusionError::ClsInSpan);
    }
    if e1.overlaps(&e2) {
        return Err(FusionError::Overlap);
    }
    let cls = m.cls();
    let vector = match strategy {
        FusionStrategy::Simple => {
            let a = pool_span(m, e1, PoolMode::Average)?;
            let b = pool_span(m, e2, PoolMode::Average)?;
            [cls, &a, &b].concat()
        }
        FusionStrategy::V1 => {
            let a = pool_span(m, e1, PoolMode::Average)?;
            let b = pool_span(m, e2, PoolMode::Average)?;
            cls.iter()
                .zip(&a)
                .zip(&b)
                .map(|((c, x), y)| (c + x + y) / 3.0)
                .collect()
        }
        FusionStrategy::V2 => {
            let mut v = cls.to_vec();
            for i in e1.indices().chain(e2.indices()) {
                v.extend_from_slice(m.row(i));
            }
            v
        }
        FusionStrategy::V3(edge) => {
            let a = pool_span(m, e1, edge.into())?;
            let b = pool_span(m, e2, edge.into())?;
            [cls, &a, &b].concat()
        }
    };
    debug_assert_eq!(
        vector.len(),
        strategy.output_len(m.dim(), e1.len(), e2.len())
    );
    Ok(FusedRepresentation { vector, strategy })
}

/// One fusion test case: a matrix and the two entity spans over it.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionFixture {
    pub matrix: EmbeddingMatrix,
    pub e1: EntitySpan,
    pub e2: EntitySpan,
}

#[derive(Deserialize)]
struct FixtureRecord {
    rows: Vec<Vec<f64>>,
    e1: EntitySpan,
    e2: EntitySpan,
}

/// Reads JSONL fixtures `{"rows": [[…]], "e1": {start,end}, "e2": {start,end}}`.
pub fn read_fixtures<R: BufRead>(reader: R) -> Result<Vec<FusionFixture>, FusionError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let err = |message: String| FusionError::Fixture {
            line: i + 1,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let matrix = EmbeddingMatrix::from_rows(record.rows).map_err(|e| err(e.to_string()))?;
        out.push(FusionFixture {
            matrix,
            e1: record.e1,
            e2: record.e2,
        });
    }
    Ok(out)
}
