//! Probing embeddings of place names for geographic knowledge.
//!
//! The crate is split along the experimental protocol:
//!
//! * [`geodata`]: cities, countries, border adjacency, deterministic splits.
//! * [`embedstore`]: the GEMB interchange format and the join between
//!   entity vectors and geographic ground truth.
//! * [`numprobes`]: coordinate-descent linear probes and a one-hidden-layer MLP.
//! * [`evaluation`]: metrics, permutation control tasks, PER and selectivity.
//! * [`simanalysis`]: intra/inter-country cosine similarity analysis.
//! * [`pipeline`]: end-to-end task runners and report emission.

pub mod embedstore;
pub mod evaluation;
pub mod geodata;
pub mod numprobes;
pub mod pipeline;
pub mod rng;
pub mod simanalysis;

pub use embedstore::{ContextId, EmbeddingMatrix, EmbeddingRecord, EmbeddingStore, Pooling};
pub use evaluation::{ControlStats, ProbeReport};
pub use geodata::{BorderGraph, CityRecord, CountryRecord, GeoPoint, SplitSpec};
pub use simanalysis::SimilaritySummary;
