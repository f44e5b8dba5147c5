//! Corpus engineering for entity-tagged relation-extraction datasets.
//!
//! - [`corpus`]: the `<e1>…</e1>` / `<e2>…</e2>` tagged-sentence model, SemEval and JSONL I/O
//! - [`repair`]: tag-fault validation and the repair pipeline
//! - [`augment`]: seeded deletion/swap and back-translation with entity sentinels
//! - [`translate`]: translation backends (HTTP, transcript record/replay, mocks)
//! - [`fusion`]: entity-marker export and span pooling/fusion math
//! - [`score`]: relation-classification scoring under the three label regimes

pub mod augment;
pub mod corpus;
pub mod fusion;
pub mod repair;
pub mod score;
pub mod translate;
