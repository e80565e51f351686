use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::core::{probe_borders, probe_gps, probe_population, ProbeOptions, ProbeRun, ReportMeta};
use super::output::{emit_report, emit_similarity, write_model, SimilarityRecord};
use super::{Dataset, PipelineError, Result, RunConfig, Task};
use crate::embedstore::{join, read_sidecar, read_store, EmbeddingStore, JoinOptions, Joined, NamedEntity, Pooling};
use crate::evaluation::RunProvenance;
use crate::geodata::{load_borders, load_cities, load_countries, CityRecord, CountryRecord};
use crate::simanalysis::{pairwise_intra_inter, HistogramSpec, SimError, SimilaritySummary};

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run: ProbeRun,
    pub written: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimilarityRun {
    pub record: SimilarityRecord,
    pub written: Vec<PathBuf>,
}

fn load_embeddings(config: &RunConfig) -> Result<(EmbeddingStore, String)> {
    let store = read_store(&config.embeddings).map_err(PipelineError::Store)?;
    let model_id = match &config.model_id {
        Some(m) => m.clone(),
        None => match read_sidecar(&config.embeddings).map_err(PipelineError::Store)? {
            Some(meta) => meta.model_id,
            None => config
                .embeddings
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into()),
        },
    };
    Ok((store, model_id))
}

fn join_opts(config: &RunConfig) -> JoinOptions {
    JoinOptions {
        pooling: config.pooling,
        max_missing_fraction: config.max_missing_fraction,
    }
}

fn joined<T: NamedEntity + Clone>(entities: &[T], store: &EmbeddingStore, config: &RunConfig) -> Result<Joined<T>> {
    let j = join(entities, store, &join_opts(config)).map_err(PipelineError::Join)?;
    if !j.unresolved.is_empty() {
        log::warn!("{} of {} entities missing from the store", j.unresolved.len(), entities.len());
    }
    Ok(j)
}

fn cities(config: &RunConfig) -> Result<Vec<CityRecord>> {
    let path = config.cities.as_ref().ok_or_else(|| PipelineError::Config("--cities is required".into()))?;
    Ok(load_cities(path, config.min_population)?)
}

fn countries(config: &RunConfig) -> Result<Vec<CountryRecord>> {
    let path = config
        .countries
        .as_ref()
        .ok_or_else(|| PipelineError::Config("--countries is required".into()))?;
    Ok(load_countries(path)?)
}

fn meta<T>(j: &Joined<T>, model_id: &str, config: &RunConfig) -> ReportMeta {
    ReportMeta {
        model_id: model_id.to_string(),
        dataset: config.dataset.as_str().to_string(),
        pooling: config.pooling,
        unresolved: j.unresolved.clone(),
    }
}

fn finish(mut run: ProbeRun, config: &RunConfig) -> Result<RunOutput> {
    run.report.provenance = Some(RunProvenance::now());
    let mut written = Vec::new();
    if let Some(out) = &config.out {
        written.extend(emit_report(std::slice::from_ref(&run.report), out)?);
        written.extend(write_model(&run, out)?);
    }
    Ok(RunOutput { run, written })
}

pub fn run_gps_task(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.task != Task::Gps {
        return Err(PipelineError::Config("not a gps config".into()));
    }
    let (store, model_id) = load_embeddings(config)?;
    let opts = ProbeOptions::from_config(config);
    let run = match config.dataset {
        Dataset::Cities => {
            let j = joined(&cities(config)?, &store, config)?;
            let truth: Vec<_> = j.targets.iter().map(|c| c.location).collect();
            probe_gps(j.matrix.x.view(), &truth, &opts, &meta(&j, &model_id, config))?
        }
        Dataset::Countries => {
            let j = joined(&countries(config)?, &store, config)?;
            let truth: Vec<_> = j.targets.iter().map(|c| c.centroid).collect();
            probe_gps(j.matrix.x.view(), &truth, &opts, &meta(&j, &model_id, config))?
        }
    };
    finish(run, config)
}

pub fn run_population_task(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.task != Task::Population {
        return Err(PipelineError::Config("not a population config".into()));
    }
    let (store, model_id) = load_embeddings(config)?;
    let opts = ProbeOptions::from_config(config);
    let run = match config.dataset {
        Dataset::Cities => {
            let j = joined(&cities(config)?, &store, config)?;
            let pop: Vec<f64> = j.targets.iter().map(|c| c.population as f64).collect();
            probe_population(j.matrix.x.view(), &pop, "inhabitants^2", &opts, &meta(&j, &model_id, config))?
        }
        Dataset::Countries => {
            let j = joined(&countries(config)?, &store, config)?;
            let pop: Vec<f64> = j.targets.iter().map(|c| c.population_millions).collect();
            probe_population(j.matrix.x.view(), &pop, "millions^2", &opts, &meta(&j, &model_id, config))?
        }
    };
    finish(run, config)
}

pub fn run_border_task(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.task != Task::Borders {
        return Err(PipelineError::Config("not a borders config".into()));
    }
    let (store, model_id) = load_embeddings(config)?;
    let all = countries(config)?;
    let path = config.borders.as_ref().expect("validated");
    let ingest = load_borders(path, &all)?;
    let j = joined(&all, &store, config)?;
    let codes: Vec<String> = j.targets.iter().map(|c| c.code.clone()).collect();
    let opts = ProbeOptions::from_config(config);
    let mut run = probe_borders(j.matrix.x.view(), &codes, &ingest.graph, &opts, &meta(&j, &model_id, config))?;
    if ingest.skipped_unknown > 0 {
        run.report.warnings.push(format!(
            "{} border entries referenced unknown country codes",
            ingest.skipped_unknown
        ));
    }
    finish(run, config)
}

/// Dispatches a probe task.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    match config.task {
        Task::Gps => run_gps_task(config),
        Task::Population => run_population_task(config),
        Task::Borders => run_border_task(config),
        Task::Similarity => Err(PipelineError::Config("use run_similarity for the similarity analysis".into())),
    }
}

pub fn run_similarity(config: &RunConfig) -> Result<SimilarityRun> {
    config.validate()?;
    if config.task != Task::Similarity {
        return Err(PipelineError::Config("not a similarity config".into()));
    }
    let (store, model_id) = load_embeddings(config)?;
    let j = joined(&cities(config)?, &store, config)?;
    let x = &j.matrix.x;
    let first = x.row(0);
    if x.rows().into_iter().all(|r| r == first) {
        log::warn!("every city has the same vector");
        return Err(SimError::Degenerate("every city has the same vector, so intra and inter coincide".into()).into());
    }
    let labels: Vec<&str> = j.targets.iter().map(|c| c.country_code.as_str()).collect();
    let summary: SimilaritySummary = pairwise_intra_inter(&labels, x.view(), &HistogramSpec::default())?;
    if summary.intra_count == 0 {
        return Err(SimError::Degenerate("no country has two cities, so there are no intra pairs".into()).into());
    }
    let record = SimilarityRecord {
        model_id,
        pooling: config.pooling,
        n_cities: x.nrows(),
        unresolved: j.unresolved.clone(),
        summary,
    };
    let written = match &config.out {
        Some(out) => emit_similarity(&record, out)?,
        None => Vec::new(),
    };
    Ok(SimilarityRun { record, written })
}

/// Inputs to validate without running a probe.
#[derive(Debug, Clone, Default)]
pub struct IngestInputs {
    pub embeddings: Option<PathBuf>,
    pub cities: Option<PathBuf>,
    pub countries: Option<PathBuf>,
    pub borders: Option<PathBuf>,
    pub min_population: u64,
    pub pooling: Pooling,
    pub max_missing_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub cities: Option<usize>,
    pub countries: Option<usize>,
    pub border_edges: Option<usize>,
    pub border_entries_skipped: usize,
    pub store_records: Option<usize>,
    pub store_dim: Option<usize>,
    pub unresolved_cities: Vec<String>,
    pub unresolved_countries: Vec<String>,
}

/// Loads and cross-checks whatever inputs are given.
pub fn ingest(inputs: &IngestInputs) -> Result<IngestSummary> {
    let load = |p: &Path| read_store(p).map_err(PipelineError::Store);
    let store = inputs.embeddings.as_deref().map(load).transpose()?;
    let cities = inputs
        .cities
        .as_ref()
        .map(|p| load_cities(p, inputs.min_population))
        .transpose()?;
    let countries = inputs.countries.as_ref().map(load_countries).transpose()?;
    let borders = match (&inputs.borders, &countries) {
        (Some(p), Some(c)) => Some(load_borders(p, c)?),
        (Some(_), None) => return Err(PipelineError::Config("--borders needs --countries".into())),
        _ => None,
    };
    let opts = JoinOptions {
        pooling: inputs.pooling,
        max_missing_fraction: inputs.max_missing_fraction,
    };
    let mut summary = IngestSummary {
        cities: cities.as_ref().map(Vec::len),
        countries: countries.as_ref().map(Vec::len),
        border_edges: borders.as_ref().map(|b| b.graph.edge_count()),
        border_entries_skipped: borders.map_or(0, |b| b.skipped_unknown),
        store_records: store.as_ref().map(EmbeddingStore::len),
        store_dim: store.as_ref().map(EmbeddingStore::dim),
        unresolved_cities: Vec::new(),
        unresolved_countries: Vec::new(),
    };
    if let Some(store) = &store {
        if let Some(c) = &cities {
            summary.unresolved_cities = join(c, store, &opts).map_err(PipelineError::Join)?.unresolved;
        }
        if let Some(c) = &countries {
            summary.unresolved_countries = join(c, store, &opts).map_err(PipelineError::Join)?.unresolved;
        }
    }
    Ok(summary)
}
