use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::core::ProbeRun;
use super::{PipelineError, Result};
use crate::embedstore::Pooling;
use crate::evaluation::{appendix_tsv, table1_tsv, table2_tsv, EvalError, ProbeReport, ScoreKind};
use crate::simanalysis::{histogram_tsv, overlay_svg, summary_tsv, SimilaritySummary};

/// Similarity analysis outcome as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    pub model_id: String,
    pub pooling: Pooling,
    pub n_cities: usize,
    pub unresolved: Vec<String>,
    pub summary: SimilaritySummary,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|source| PipelineError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

fn slug(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn report_stem(r: &ProbeReport) -> String {
    format!(
        "{}_{}_{}_{}",
        r.task.as_str(),
        slug(&r.dataset),
        slug(&r.probe_kind),
        slug(&r.model_id)
    )
}

/// Writes one JSON file per report plus the aggregate tables.
///
/// Every report must carry a control and a score that its raw errors
/// reproduce.
pub fn emit_report(reports: &[ProbeReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(EvalError::Empty.into());
    }
    for r in reports {
        r.verify()?;
    }
    ensure_dir(dir)?;
    let mut written = Vec::new();
    for r in reports {
        let text = serde_json::to_string_pretty(r).expect("report serializes");
        written.push(write(dir.join(format!("{}.json", report_stem(r))), &text)?);
    }
    written.extend(write_tables(reports, &[], dir)?);
    Ok(written)
}

/// Aggregate TSVs for whichever report kinds are present.
pub fn write_tables(reports: &[ProbeReport], similarity: &[SimilarityRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    if reports.iter().any(|r| r.score.kind == ScoreKind::Per) {
        written.push(write(dir.join("table1.tsv"), &table1_tsv(reports))?);
        written.push(write(dir.join("appendix.tsv"), &appendix_tsv(reports))?);
    }
    if reports.iter().any(|r| r.score.kind == ScoreKind::Selectivity) {
        written.push(write(dir.join("table2.tsv"), &table2_tsv(reports))?);
    }
    if !similarity.is_empty() {
        let rows: Vec<(&str, &SimilaritySummary)> =
            similarity.iter().map(|s| (s.model_id.as_str(), &s.summary)).collect();
        written.push(write(dir.join("table3.tsv"), &summary_tsv(&rows))?);
    }
    Ok(written)
}

/// Model parameters of a run, one file per fitted model.
pub fn write_model(run: &ProbeRun, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let stem = report_stem(&run.report);
    let mut written = Vec::new();
    for (i, m) in run.models.iter().enumerate() {
        let name = if run.models.len() == 1 {
            format!("{stem}.model.json")
        } else {
            format!("{stem}.fold{i}.model.json")
        };
        let text = serde_json::to_string(m).expect("model serializes");
        written.push(write(dir.join(name), &text)?);
    }
    Ok(written)
}

/// Summary JSON, histogram TSV, overlay SVG and a one-row table.
pub fn emit_similarity(record: &SimilarityRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let stem = format!("similarity_{}", slug(&record.model_id));
    let json = serde_json::to_string_pretty(record).expect("summary serializes");
    Ok(vec![
        write(dir.join(format!("{stem}.json")), &json)?,
        write(dir.join(format!("{stem}_summary.tsv")), &summary_tsv(&[(&record.model_id, &record.summary)]))?,
        write(dir.join(format!("{stem}_histogram.tsv")), &histogram_tsv(&record.summary))?,
        write(
            dir.join(format!("{stem}.svg")),
            &overlay_svg(&record.summary, &format!("{}: city cosine similarity", record.model_id)),
        )?,
    ])
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            name.ends_with(".json") && !name.ends_with(".model.json")
        })
        .collect();
    paths.sort();
    Ok(paths)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
}

/// Probe reports in `dir`, sorted by file name.
pub fn load_reports(dir: &Path) -> Result<Vec<ProbeReport>> {
    json_files(dir)?
        .iter()
        .filter(|p| !is_similarity(p))
        .map(|p| read_json(p))
        .collect()
}

/// Similarity records in `dir`, sorted by file name.
pub fn load_similarity(dir: &Path) -> Result<Vec<SimilarityRecord>> {
    json_files(dir)?.iter().filter(|p| is_similarity(p)).map(|p| read_json(p)).collect()
}

fn is_similarity(p: &Path) -> bool {
    p.file_name()
        .map(|n| n.to_string_lossy().starts_with("similarity_"))
        .unwrap_or(false)
}
