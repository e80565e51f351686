use ndarray::Array2;

use super::{normalize_name, pool_contexts, EmbeddingStore, Pooling, Result, StoreError};
use crate::geodata::{CityRecord, CountryRecord};

/// Unresolved entities tolerated before a join fails.
pub const DEFAULT_MAX_MISSING_FRACTION: f64 = 0.05;

/// Anything that can be looked up in a store by name.
pub trait NamedEntity {
    fn entity_name(&self) -> &str;
}

impl NamedEntity for CityRecord {
    fn entity_name(&self) -> &str {
        &self.name
    }
}

impl NamedEntity for CountryRecord {
    fn entity_name(&self) -> &str {
        &self.name
    }
}

impl NamedEntity for String {
    fn entity_name(&self) -> &str {
        self
    }
}

/// Probe input: row `i` of `x` is the pooled vector of `row_entities[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub row_entities: Vec<String>,
    pub x: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JoinOptions {
    pub pooling: Pooling,
    pub max_missing_fraction: f64,
}

impl Default for JoinOptions {
    fn default() -> Self {
        JoinOptions {
            pooling: Pooling::Mean,
            max_missing_fraction: DEFAULT_MAX_MISSING_FRACTION,
        }
    }
}

/// Matrix plus targets aligned row-for-row.
#[derive(Debug, Clone)]
pub struct Joined<T> {
    pub matrix: EmbeddingMatrix,
    pub targets: Vec<T>,
    /// Input names with no vector in the store, in input order.
    pub unresolved: Vec<String>,
}

/// Aligns `entities` with their pooled vectors, preserving input order.
///
/// Entities absent from the store are dropped and listed; more than
/// `max_missing_fraction` of them (or all of them) is an error.
pub fn join<T: NamedEntity + Clone>(entities: &[T], store: &EmbeddingStore, opts: &JoinOptions) -> Result<Joined<T>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    let mut targets = Vec::new();
    let mut unresolved = Vec::new();

    for e in entities {
        let name = normalize_name(e.entity_name());
        let records = store.entity_records(&name);
        if records.is_empty() {
            unresolved.push(e.entity_name().to_string());
            continue;
        }
        rows.push(pool_contexts(&name, &records, opts.pooling)?);
        names.push(name);
        targets.push(e.clone());
    }

    if rows.is_empty() {
        return Err(StoreError::Join(format!(
            "none of {} entities found in the store",
            entities.len()
        )));
    }
    let missing_fraction = unresolved.len() as f64 / entities.len() as f64;
    if missing_fraction > opts.max_missing_fraction {
        let preview: Vec<&str> = unresolved.iter().take(10).map(String::as_str).collect();
        return Err(StoreError::Join(format!(
            "{} of {} entities unresolved ({:.1}% > {:.1}%), e.g. {:?}",
            unresolved.len(),
            entities.len(),
            100.0 * missing_fraction,
            100.0 * opts.max_missing_fraction,
            preview
        )));
    }
    if !unresolved.is_empty() {
        log::warn!(
            "{} of {} entities have no embedding and are excluded: {:?}",
            unresolved.len(),
            entities.len(),
            unresolved
        );
    }

    let dim = store.dim();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let x = Array2::from_shape_vec((names.len(), dim), flat)
        .map_err(|e| StoreError::Invalid(e.to_string()))?;
    Ok(Joined {
        matrix: EmbeddingMatrix { row_entities: names, x },
        targets,
        unresolved,
    })
}
