//! Geographic ground truth: cities, countries, border adjacency and the
//! deterministic train/test partitions used by every probe.
//!
//! Tables are read-only after ingest and can be shared across threads.

mod borders;
mod point;
mod split;
mod tables;

use std::path::PathBuf;

use thiserror::Error;

pub use borders::{load_borders, make_border_pairs, BorderGraph, BorderIngest, BorderPairs, LabeledPair, PairStrategy};
pub use point::GeoPoint;
pub use split::{kfold, split, Split, SplitSpec};
pub use tables::{
    load_cities, load_countries, write_cities, write_countries, CityRecord, CountryRecord,
    DEFAULT_MIN_POPULATION,
};

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {message}")]
    Ingest {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("invalid split: {0}")]
    Split(String),
    #[error("border graph has no edges, so there is no positive class")]
    NoPositivePairs,
}

pub type Result<T, E = GeoError> = std::result::Result<T, E>;

/// Validates an ISO-3166 alpha-2 code and returns its upper-case form.
pub(crate) fn normalize_code(raw: &str) -> Result<String> {
    let code = raw.trim();
    if code.len() != 2 || !code.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(GeoError::Validation(format!(
            "country code {raw:?} is not a two-letter code"
        )));
    }
    Ok(code.to_ascii_uppercase())
}
