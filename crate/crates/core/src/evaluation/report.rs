use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{per, selectivity, ControlStats, EvalError, PermutationScope, Result};
use crate::embedstore::Pooling;
use crate::geodata::{PairStrategy, SplitSpec};
use crate::numprobes::ProbeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Gps,
    Population,
    Borders,
}

impl TaskKind {
    pub fn score_kind(self) -> ScoreKind {
        match self {
            TaskKind::Gps | TaskKind::Population => ScoreKind::Per,
            TaskKind::Borders => ScoreKind::Selectivity,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Gps => "gps",
            TaskKind::Population => "population",
            TaskKind::Borders => "borders",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Per,
    Selectivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub kind: ScoreKind,
    pub value: f64,
}

/// Everything needed to rerun a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub probe: ProbeConfig,
    pub split: SplitSpec,
    pub cross_validation: bool,
    pub n_trials: usize,
    pub control_seed: u64,
    pub permutation_scope: PermutationScope,
    pub pooling: Pooling,
    pub standardize_targets: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub earth_radius_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_features: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_strategy: Option<PairStrategy>,
    /// Rows that entered the probe after the join.
    pub n_rows: usize,
    pub unresolved: Vec<String>,
}

/// Wall-clock metadata, kept apart so reports compare byte-for-byte
/// once it is stripped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProvenance {
    pub generated_at_unix: u64,
    pub tool_version: String,
}

impl RunProvenance {
    pub fn now() -> Self {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunProvenance {
            generated_at_unix: secs,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Outcome of one probe run.
///
/// For classification, `task_error` holds the probe accuracy and the
/// control stats hold per-trial accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub task: TaskKind,
    pub model_id: String,
    pub dataset: String,
    pub probe_kind: String,
    pub task_error: f64,
    pub units: String,
    pub control: Option<ControlStats>,
    pub score: Score,
    /// Targets had no variance, so the score is pinned to 0.
    pub degenerate: bool,
    pub warnings: Vec<String>,
    pub settings: ProbeSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<RunProvenance>,
}

/// Score from the raw numbers. A degenerate PER is defined as 0.
pub fn compute_score(task: TaskKind, task_error: f64, control: &ControlStats, degenerate: bool) -> Result<Score> {
    let kind = task.score_kind();
    let value = match kind {
        ScoreKind::Per if degenerate => 0.0,
        ScoreKind::Per => per(task_error, control.mean_error)?,
        ScoreKind::Selectivity => selectivity(task_error, control.mean_error),
    };
    Ok(Score { kind, value })
}

impl ProbeReport {
    /// Recomputes the score from the stored errors and checks it matches.
    pub fn verify(&self) -> Result<()> {
        let control = self
            .control
            .as_ref()
            .ok_or_else(|| EvalError::Inconsistent(format!("{} report for {} has no control", self.task.as_str(), self.model_id)))?;
        if !control.is_consistent() {
            return Err(EvalError::Inconsistent("control mean does not match its trials".into()));
        }
        let score = compute_score(self.task, self.task_error, control, self.degenerate)?;
        if score != self.score {
            return Err(EvalError::Inconsistent(format!(
                "stored score {:?} but errors give {:?}",
                self.score, score
            )));
        }
        Ok(())
    }

    /// JSON without the wall-clock provenance field.
    pub fn to_canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.provenance = None;
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    fn control_mean(&self) -> f64 {
        self.control.as_ref().map_or(f64::NAN, |c| c.mean_error)
    }
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// PER grid: one row per (task, probe, dataset), one column per model.
pub fn table1_tsv(reports: &[ProbeReport]) -> String {
    let rows: Vec<&ProbeReport> = reports.iter().filter(|r| r.score.kind == ScoreKind::Per).collect();
    let models = first_appearance(rows.iter().map(|r| r.model_id.as_str()));
    let keys = first_appearance(rows.iter().map(|r| r.task.as_str()));
    let mut out = String::from("task\tprobe\tdataset");
    for m in &models {
        write!(out, "\t{m}").unwrap();
    }
    out.push('\n');
    for task in keys {
        let of_task: Vec<&&ProbeReport> = rows.iter().filter(|r| r.task.as_str() == task).collect();
        let mut combos: Vec<(&str, &str)> = Vec::new();
        for r in &of_task {
            let c = (r.probe_kind.as_str(), r.dataset.as_str());
            if !combos.contains(&c) {
                combos.push(c);
            }
        }
        for (probe, dataset) in combos {
            write!(out, "{task}\t{probe}\t{dataset}").unwrap();
            for m in &models {
                let cell = of_task
                    .iter()
                    .find(|r| r.probe_kind == probe && r.dataset == dataset && r.model_id == *m)
                    .map(|r| r.score.value.to_string())
                    .unwrap_or_default();
                write!(out, "\t{cell}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

/// Border classification: probe accuracy, control accuracy, selectivity.
pub fn table2_tsv(reports: &[ProbeReport]) -> String {
    let mut out = String::from("model\tprobe_accuracy\tcontrol_accuracy\tselectivity\n");
    for r in reports.iter().filter(|r| r.score.kind == ScoreKind::Selectivity) {
        writeln!(out, "{}\t{}\t{}\t{}", r.model_id, r.task_error, r.control_mean(), r.score.value).unwrap();
    }
    out
}

/// Raw probe and control errors (Prb./Ctl.) for the regression tasks.
pub fn appendix_tsv(reports: &[ProbeReport]) -> String {
    let mut out = String::from("task\tdataset\tmodel\tprobe\tprobe_error\tcontrol_error\tunits\n");
    for r in reports.iter().filter(|r| r.score.kind == ScoreKind::Per) {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.task.as_str(),
            r.dataset,
            r.model_id,
            r.probe_kind,
            r.task_error,
            r.control_mean(),
            r.units
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numprobes::LinearConfig;

    fn report(task: TaskKind, model: &str, err: f64, trials: Vec<f64>) -> ProbeReport {
        let control = ControlStats::from_trials(trials, 1).unwrap();
        let score = compute_score(task, err, &control, false).unwrap();
        ProbeReport {
            task,
            model_id: model.into(),
            dataset: "cities".into(),
            probe_kind: "linear".into(),
            task_error: err,
            units: "km".into(),
            control: Some(control),
            score,
            degenerate: false,
            warnings: vec![],
            settings: ProbeSettings {
                probe: ProbeConfig::Linear(LinearConfig::with_alpha(0.5)),
                split: SplitSpec::default(),
                cross_validation: false,
                n_trials: 2,
                control_seed: 1,
                permutation_scope: PermutationScope::FullDataset,
                pooling: Pooling::Mean,
                standardize_targets: false,
                earth_radius_km: Some(6371.0),
                pair_features: None,
                pair_strategy: None,
                n_rows: 10,
                unresolved: vec![],
            },
            provenance: Some(RunProvenance::now()),
        }
    }

    #[test]
    fn score_recomputes() {
        let r = report(TaskKind::Gps, "w2v", 3077.0, vec![6900.0, 6922.0]);
        r.verify().unwrap();
        assert!((r.score.value - (1.0 - 3077.0 / 6911.0)).abs() < 1e-15);

        let mut tampered = r.clone();
        tampered.score.value += 1e-9;
        assert!(tampered.verify().is_err());

        let mut missing = r.clone();
        missing.control = None;
        assert!(missing.verify().is_err());
    }

    #[test]
    fn json_round_trip_and_canonical_form() {
        let r = report(TaskKind::Borders, "bert", 0.873, vec![0.5, 0.52]);
        let text = serde_json::to_string(&r).unwrap();
        let back: ProbeReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert!(!r.to_canonical_json().contains("generated_at_unix"));
    }

    #[test]
    fn tables_split_by_task() {
        let reports = vec![
            report(TaskKind::Gps, "w2v", 2612.0, vec![7825.0]),
            report(TaskKind::Gps, "bert", 4195.0, vec![8057.0]),
            report(TaskKind::Borders, "bert", 0.856, vec![0.51]),
        ];
        let t1 = table1_tsv(&reports);
        let lines: Vec<&str> = t1.lines().collect();
        assert_eq!(lines[0], "task\tprobe\tdataset\tw2v\tbert");
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("gps\tlinear\tcities\t0.666"));
        let t2 = table2_tsv(&reports);
        assert_eq!(t2.lines().count(), 2);
        assert!(t2.lines().nth(1).unwrap().starts_with("bert\t0.856\t0.51\t0.34"));
        assert_eq!(appendix_tsv(&reports).lines().count(), 3);
    }
}
