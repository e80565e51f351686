use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};

use super::{PairFeatures, PipelineError, Result, RunConfig};
use crate::embedstore::Pooling;
use crate::evaluation::{
    accuracy, compute_score, mean_gps_error, mse, permutation, points_from_predictions, run_control, ControlStats,
    EvalError, PermutationScope, ProbeReport, ProbeSettings, TaskKind, EARTH_RADIUS_KM,
};
use crate::geodata::{kfold, make_border_pairs, split, BorderGraph, GeoPoint, PairStrategy, Split, SplitSpec};
use crate::numprobes::{fit_probe, FittedModel, FittedProbe, MlpTask, ModelJson, ProbeConfig};

/// Everything the in-memory probe runners need besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOptions {
    pub probe: ProbeConfig,
    pub split: SplitSpec,
    pub cross_validation: bool,
    pub n_trials: usize,
    pub control_seed: u64,
    pub permutation_scope: PermutationScope,
    pub pair_features: PairFeatures,
    pub pair_strategy: PairStrategy,
    pub pair_seed: u64,
}

impl ProbeOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        ProbeOptions {
            probe: config.probe_config(),
            split: config.split_spec(),
            cross_validation: config.uses_cross_validation(),
            n_trials: config.n_trials,
            control_seed: config.control_seed(),
            permutation_scope: config.permutation_scope,
            pair_features: config.pair_features,
            pair_strategy: config.pair_strategy,
            pair_seed: config.pair_seed(),
        }
    }

    /// MLP regression trains on standardized targets; linear probes and
    /// classifiers see raw targets.
    pub fn standardize_targets(&self) -> bool {
        matches!(self.probe, ProbeConfig::Mlp(c) if c.task == MlpTask::Regression)
    }
}

/// Labels copied into the report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReportMeta {
    pub model_id: String,
    pub dataset: String,
    pub pooling: Pooling,
    pub unresolved: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub report: ProbeReport,
    /// One per fold under cross-validation, otherwise one.
    pub models: Vec<ModelJson>,
}

/// Targets for one control trial.
///
/// `FullDataset` permutes all rows, so test targets are shuffled too.
/// `TrainOnly` shuffles the training rows among themselves and leaves the
/// test rows untouched.
pub fn control_targets(y: ArrayView2<f64>, split: &Split, scope: PermutationScope, seed: u64) -> Array2<f64> {
    match scope {
        PermutationScope::FullDataset => y.select(Axis(0), &permutation(y.nrows(), seed)),
        PermutationScope::TrainOnly => {
            let mut out = y.to_owned();
            let perm = permutation(split.train.len(), seed);
            for (dst, src) in split.train.iter().zip(perm) {
                out.row_mut(*dst).assign(&y.row(split.train[src]));
            }
            out
        }
    }
}

fn plan(n: usize, opts: &ProbeOptions) -> Result<Vec<Split>> {
    Ok(if opts.cross_validation {
        kfold(n, &opts.split)?
    } else {
        vec![split(n, &opts.split)?]
    })
}

type Metric<'a> = dyn Fn(ArrayView2<f64>, ArrayView2<f64>) -> Result<f64, EvalError> + Sync + 'a;

fn fit_and_score(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    s: &Split,
    opts: &ProbeOptions,
    metric: &Metric,
) -> Result<(f64, FittedProbe)> {
    let x_train = x.select(Axis(0), &s.train);
    let y_train = y.select(Axis(0), &s.train);
    let probe = fit_probe(x_train.view(), y_train.view(), &opts.probe, opts.standardize_targets())?;
    let pred = probe.predict(x.select(Axis(0), &s.test).view())?;
    let err = metric(pred.view(), y.select(Axis(0), &s.test).view())?;
    Ok((err, probe))
}

/// Mean test error over the planned splits.
fn evaluate(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    splits: &[Split],
    opts: &ProbeOptions,
    metric: &Metric,
) -> Result<(f64, Vec<FittedProbe>)> {
    let mut total = 0.0;
    let mut probes = Vec::with_capacity(splits.len());
    for s in splits {
        let (err, p) = fit_and_score(x, y, s, opts, metric)?;
        total += err;
        probes.push(p);
    }
    Ok((total / splits.len() as f64, probes))
}

fn control(
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    splits: &[Split],
    opts: &ProbeOptions,
    metric: &Metric,
) -> Result<ControlStats> {
    Ok(run_control(opts.n_trials, opts.control_seed, |t| {
        let mut total = 0.0;
        for s in splits {
            let yp = control_targets(y, s, opts.permutation_scope, t.seed);
            total += fit_and_score(x, yp.view(), s, opts, metric)?.0;
        }
        Ok::<f64, PipelineError>(total / splits.len() as f64)
    })?)
}

fn warnings_for(probes: &[FittedProbe], meta: &ReportMeta) -> Vec<String> {
    let mut w = Vec::new();
    if !meta.unresolved.is_empty() {
        w.push(format!("{} entities had no embedding and were dropped", meta.unresolved.len()));
    }
    for (i, p) in probes.iter().enumerate() {
        if let FittedModel::Linear(m) = &p.model {
            if !m.converged {
                w.push(format!("linear probe {i} stopped after {} sweeps without converging", m.sweeps));
            }
        }
    }
    w
}

fn rows_identical(y: ArrayView2<f64>) -> bool {
    let first = y.row(0);
    y.rows().into_iter().all(|r| r == first)
}

#[allow(clippy::too_many_arguments)]
fn regression_report(
    task: TaskKind,
    x: ArrayView2<f64>,
    y: ArrayView2<f64>,
    opts: &ProbeOptions,
    meta: &ReportMeta,
    units: &str,
    earth_radius_km: Option<f64>,
    metric: &Metric,
) -> Result<ProbeRun> {
    if x.nrows() != y.nrows() {
        return Err(PipelineError::Config(format!("{} rows of features, {} of targets", x.nrows(), y.nrows())));
    }
    let splits = plan(x.nrows(), opts)?;
    let (task_error, probes) = evaluate(x, y, &splits, opts, metric)?;
    let control = control(x, y, &splits, opts, metric)?;
    let mut warnings = warnings_for(&probes, meta);
    let degenerate = rows_identical(y) || control.mean_error <= 0.0;
    if degenerate {
        log::warn!("targets have no variance; PER is reported as 0");
        warnings.push("degenerate: targets have no variance, PER fixed at 0".into());
    }
    let score = compute_score(task, task_error, &control, degenerate)?;
    let report = ProbeReport {
        task,
        model_id: meta.model_id.clone(),
        dataset: meta.dataset.clone(),
        probe_kind: opts.probe.kind().to_string(),
        task_error,
        units: units.to_string(),
        control: Some(control),
        score,
        degenerate,
        warnings,
        settings: ProbeSettings {
            probe: opts.probe,
            split: opts.split,
            cross_validation: opts.cross_validation,
            n_trials: opts.n_trials,
            control_seed: opts.control_seed,
            permutation_scope: opts.permutation_scope,
            pooling: meta.pooling,
            standardize_targets: opts.standardize_targets(),
            earth_radius_km,
            pair_features: None,
            pair_strategy: None,
            n_rows: x.nrows(),
            unresolved: meta.unresolved.clone(),
        },
        provenance: None,
    };
    Ok(ProbeRun {
        report,
        models: probes.iter().map(FittedProbe::model_json).collect(),
    })
}

fn gps_metric(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, EvalError> {
    let p = points_from_predictions(pred)?;
    let t = points_from_predictions(truth)?;
    mean_gps_error(&p, &t)
}

fn mse_metric(pred: ArrayView2<f64>, truth: ArrayView2<f64>) -> Result<f64, EvalError> {
    mse(&pred.column(0).to_vec(), &truth.column(0).to_vec())
}

/// GPS regression: mean great-circle error in km, baselined by PER.
pub fn probe_gps(x: ArrayView2<f64>, truth: &[GeoPoint], opts: &ProbeOptions, meta: &ReportMeta) -> Result<ProbeRun> {
    let y = Array2::from_shape_fn((truth.len(), 2), |(i, j)| if j == 0 { truth[i].lat() } else { truth[i].lon() });
    regression_report(TaskKind::Gps, x, y.view(), opts, meta, "km", Some(EARTH_RADIUS_KM), &gps_metric)
}

/// Population regression: test MSE in `units`, baselined by PER.
pub fn probe_population(
    x: ArrayView2<f64>,
    population: &[f64],
    units: &str,
    opts: &ProbeOptions,
    meta: &ReportMeta,
) -> Result<ProbeRun> {
    let y = Array2::from_shape_fn((population.len(), 1), |(i, _)| population[i]);
    regression_report(TaskKind::Population, x, y.view(), opts, meta, units, None, &mse_metric)
}

/// Feature vector(s) for the pair `(u, v)`.
pub fn pair_features(u: ArrayView1<f64>, v: ArrayView1<f64>, mode: PairFeatures) -> Vec<Vec<f64>> {
    match mode {
        PairFeatures::Concat => vec![
            u.iter().chain(v.iter()).copied().collect(),
            v.iter().chain(u.iter()).copied().collect(),
        ],
        PairFeatures::Symmetric => vec![u
            .iter()
            .zip(v.iter())
            .map(|(a, b)| a + b)
            .chain(u.iter().zip(v.iter()).map(|(a, b)| (a - b).abs()))
            .collect()],
    }
}

struct PairTable {
    rows: Vec<(usize, usize)>,
}

impl PairTable {
    fn build(&self, x: ArrayView2<f64>, idx: &[usize], labels: &[f64], mode: PairFeatures) -> (Array2<f64>, Array2<f64>) {
        let mut feats = Vec::new();
        let mut ys = Vec::new();
        for &i in idx {
            let (a, b) = self.rows[i];
            for f in pair_features(x.row(a), x.row(b), mode) {
                feats.extend(f);
                ys.push(labels[i]);
            }
        }
        let width = 2 * x.ncols();
        let n = ys.len();
        (
            Array2::from_shape_vec((n, width), feats).expect("pair rows have equal width"),
            Array2::from_shape_vec((n, 1), ys).expect("one label per row"),
        )
    }
}

fn pair_accuracy(
    x: ArrayView2<f64>,
    table: &PairTable,
    s: &Split,
    labels: &[f64],
    opts: &ProbeOptions,
) -> Result<(f64, FittedProbe)> {
    let (xtr, ytr) = table.build(x, &s.train, labels, opts.pair_features);
    let (xte, yte) = table.build(x, &s.test, labels, opts.pair_features);
    let probe = fit_probe(xtr.view(), ytr.view(), &opts.probe, false)?;
    let pred = probe.predict(xte.view())?;
    let p: Vec<bool> = pred.column(0).iter().map(|&v| v >= 0.5).collect();
    let t: Vec<bool> = yte.column(0).iter().map(|&v| v >= 0.5).collect();
    Ok((accuracy(&p, &t)?, probe))
}

/// Border classification on country pairs, baselined by selectivity.
///
/// `codes[i]` names row `i` of `x`. Graph nodes without a row are dropped.
pub fn probe_borders(
    x: ArrayView2<f64>,
    codes: &[String],
    graph: &BorderGraph,
    opts: &ProbeOptions,
    meta: &ReportMeta,
) -> Result<ProbeRun> {
    if codes.len() != x.nrows() {
        return Err(PipelineError::Config(format!("{} codes for {} rows", codes.len(), x.nrows())));
    }
    if !matches!(opts.probe, ProbeConfig::Mlp(c) if c.task == MlpTask::BinaryClassification) {
        return Err(PipelineError::Config("border classification needs an mlp classifier".into()));
    }
    let row_of: HashMap<&str, usize> = codes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut sub = BorderGraph::new(graph.nodes().filter(|c| row_of.contains_key(c)));
    for (a, b) in graph.edges() {
        if row_of.contains_key(a) && row_of.contains_key(b) {
            sub.add_edge(a, b)?;
        }
    }
    let pairs = make_border_pairs(&sub, opts.pair_strategy, opts.pair_seed)?;
    let table = PairTable {
        rows: pairs.pairs.iter().map(|p| (row_of[p.a.as_str()], row_of[p.b.as_str()])).collect(),
    };
    let labels: Vec<f64> = pairs.pairs.iter().map(|p| f64::from(u8::from(p.adjacent))).collect();
    let s = split(labels.len(), &opts.split)?;

    let (task_accuracy, probe) = pair_accuracy(x, &table, &s, &labels, opts)?;
    let label_col = Array2::from_shape_vec((labels.len(), 1), labels.clone()).expect("one column");
    let control = run_control(opts.n_trials, opts.control_seed, |t| {
        let permuted = control_targets(label_col.view(), &s, opts.permutation_scope, t.seed);
        let permuted: Vec<f64> = permuted.column(0).to_vec();
        Ok::<f64, PipelineError>(pair_accuracy(x, &table, &s, &permuted, opts)?.0)
    })?;

    let mut warnings = warnings_for(&[], meta);
    if pairs.shortfall > 0 {
        warnings.push(format!("{} negative pairs short of a balanced set", pairs.shortfall));
    }
    let score = compute_score(TaskKind::Borders, task_accuracy, &control, false)?;
    let report = ProbeReport {
        task: TaskKind::Borders,
        model_id: meta.model_id.clone(),
        dataset: meta.dataset.clone(),
        probe_kind: opts.probe.kind().to_string(),
        task_error: task_accuracy,
        units: "accuracy".into(),
        control: Some(control),
        score,
        degenerate: false,
        warnings,
        settings: ProbeSettings {
            probe: opts.probe,
            split: opts.split,
            cross_validation: false,
            n_trials: opts.n_trials,
            control_seed: opts.control_seed,
            permutation_scope: opts.permutation_scope,
            pooling: meta.pooling,
            standardize_targets: false,
            earth_radius_km: None,
            pair_features: Some(opts.pair_features.as_str().into()),
            pair_strategy: Some(opts.pair_strategy),
            n_rows: labels.len(),
            unresolved: meta.unresolved.clone(),
        },
        provenance: None,
    };
    Ok(ProbeRun {
        report,
        models: vec![probe.model_json()],
    })
}
