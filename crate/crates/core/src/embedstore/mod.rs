//! Embedding interchange and the join between entity vectors and
//! geographic ground truth.
//!
//! A store holds one vector per `(entity, context)` key. Contextual models
//! contribute three records per entity (context ids 0, 1, 2, one per
//! sentence template); static word vectors contribute a single record with
//! context id 255.

mod format;
mod join;
mod pool;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use format::{read_sidecar, read_store, sidecar_path, write_store, ExtractionMetadata, StoreFormat};
pub use join::{join, EmbeddingMatrix, JoinOptions, Joined, NamedEntity, DEFAULT_MAX_MISSING_FRACTION};
pub use pool::{pool_contexts, Pooling};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },
    #[error("invalid store: {0}")]
    Invalid(String),
    #[error("entity {entity:?} has no vector for context {context}")]
    MissingContext { entity: String, context: ContextId },
    #[error("join failed: {0}")]
    Join(String),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Template index of a contextual embedding, or [`ContextId::STATIC`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContextId(pub u8);

impl ContextId {
    /// Context-free vectors (static word embeddings).
    pub const STATIC: ContextId = ContextId(255);
    /// The three sentence-template contexts.
    pub const TEMPLATES: [ContextId; 3] = [ContextId(0), ContextId(1), ContextId(2)];
}

impl std::fmt::Display for ContextId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if *self == ContextId::STATIC {
            write!(f, "static")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub entity: String,
    pub context: ContextId,
    pub vector: Vec<f32>,
}

/// Name normalization used for every store lookup: NFC, then trim.
/// Case is preserved and there is no fuzzy matching.
pub fn normalize_name(name: &str) -> String {
    name.nfc().collect::<String>().trim().to_string()
}

/// Validated, immutable collection of embedding records sharing one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    records: Vec<EmbeddingRecord>,
    by_entity: HashMap<String, Vec<usize>>,
}

impl EmbeddingStore {
    /// Builds a store, taking the dimension from the first record.
    pub fn new(records: Vec<EmbeddingRecord>) -> Result<Self> {
        let dim = records.first().map_or(0, |r| r.vector.len());
        Self::with_dim(dim, records)
    }

    pub fn with_dim(dim: usize, records: Vec<EmbeddingRecord>) -> Result<Self> {
        let mut by_entity: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            let key = normalize_name(&r.entity);
            if key.is_empty() {
                return Err(StoreError::Invalid(format!("record {i} has an empty entity name")));
            }
            if r.entity.len() > u16::MAX as usize {
                return Err(StoreError::Invalid(format!(
                    "record {i}: entity name longer than {} bytes",
                    u16::MAX
                )));
            }
            if r.vector.len() != dim {
                return Err(StoreError::Invalid(format!(
                    "record {i} ({:?}) has dimension {}, store dimension is {dim}",
                    r.entity,
                    r.vector.len()
                )));
            }
            let slot = by_entity.entry(key).or_default();
            if slot.iter().any(|&j| records[j].context == r.context) {
                return Err(StoreError::Invalid(format!(
                    "duplicate key ({:?}, context {})",
                    r.entity, r.context
                )));
            }
            slot.push(i);
        }
        Ok(EmbeddingStore {
            dim,
            records,
            by_entity,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[EmbeddingRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<EmbeddingRecord> {
        self.records
    }

    /// All records of an entity (lookup by normalized name).
    pub fn entity_records(&self, entity: &str) -> Vec<&EmbeddingRecord> {
        self.by_entity
            .get(&normalize_name(entity))
            .map(|ix| ix.iter().map(|&i| &self.records[i]).collect())
            .unwrap_or_default()
    }

    pub fn get(&self, entity: &str, context: ContextId) -> Option<&EmbeddingRecord> {
        self.entity_records(entity)
            .into_iter()
            .find(|r| r.context == context)
    }

    pub fn contains_entity(&self, entity: &str) -> bool {
        self.by_entity.contains_key(&normalize_name(entity))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(entity: &str, ctx: u8, v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord {
            entity: entity.into(),
            context: ContextId(ctx),
            vector: v.to_vec(),
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let err = EmbeddingStore::new(vec![rec("a", 0, &[1.0; 4]), rec("b", 0, &[1.0; 5])]);
        assert!(matches!(err, Err(StoreError::Invalid(_))));
    }

    #[test]
    fn rejects_duplicates_and_empty_names() {
        assert!(EmbeddingStore::new(vec![rec("a", 0, &[1.0]), rec("a", 0, &[2.0])]).is_err());
        assert!(EmbeddingStore::new(vec![rec("  ", 0, &[1.0])]).is_err());
        assert!(EmbeddingStore::new(vec![rec("a", 0, &[1.0]), rec("a", 1, &[2.0])]).is_ok());
    }

    #[test]
    fn lookup_uses_nfc_and_trim() {
        // "é" precomposed vs decomposed
        let store = EmbeddingStore::new(vec![rec("Montr\u{e9}al", 255, &[1.0])]).unwrap();
        assert!(store.get(" Montre\u{301}al ", ContextId::STATIC).is_some());
        assert!(store.get("montréal", ContextId::STATIC).is_none());
        // normalized duplicates collide
        assert!(EmbeddingStore::new(vec![
            rec("Montr\u{e9}al", 0, &[1.0]),
            rec("Montre\u{301}al", 0, &[1.0])
        ])
        .is_err());
    }
}
