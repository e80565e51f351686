//! End-to-end runs: ingest, join, probe, control, score, report.
//!
//! The `probe_*` functions work on in-memory matrices; the `run_*` functions
//! load everything named in a [`RunConfig`] and delegate to them.

mod config;
mod core;
mod output;
mod run;

use std::path::PathBuf;

use thiserror::Error;

pub use self::config::{Dataset, PairFeatures, ProbeChoice, RunConfig, Task};
pub use self::core::{
    control_targets, pair_features, probe_borders, probe_gps, probe_population, ProbeOptions, ProbeRun, ReportMeta,
};
pub use self::output::{
    emit_report, emit_similarity, load_reports, load_similarity, write_model, write_tables, SimilarityRecord,
};
pub use self::run::{
    ingest, run, run_border_task, run_gps_task, run_population_task, run_similarity, IngestInputs, IngestSummary,
    RunOutput, SimilarityRun,
};

use crate::embedstore::StoreError;
use crate::evaluation::EvalError;
use crate::geodata::GeoError;
use crate::numprobes::ProbeError;
use crate::simanalysis::SimError;

/// Errors labelled with the stage that raised them.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ingest: {0}")]
    Ingest(#[from] GeoError),
    #[error("ingest: {0}")]
    Store(StoreError),
    #[error("join: {0}")]
    Join(StoreError),
    #[error("fit: {0}")]
    Fit(#[from] ProbeError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("eval: {0}")]
    Similarity(#[from] SimError),
    #[error("output: cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Bad configuration or malformed input, as opposed to a failure while
    /// running on valid input.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Config(_) => true,
            PipelineError::Ingest(e) => !matches!(e, GeoError::Io { .. }),
            PipelineError::Store(e) | PipelineError::Join(e) => !matches!(e, StoreError::Io { .. }),
            _ => false,
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
