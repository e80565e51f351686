use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoprobe::embedstore::{ContextId, Pooling, DEFAULT_MAX_MISSING_FRACTION};
use geoprobe::evaluation::{PermutationScope, ProbeReport, DEFAULT_CONTROL_TRIALS};
use geoprobe::geodata::DEFAULT_MIN_POPULATION;
use geoprobe::numprobes::{Penalty, DEFAULT_HIDDEN_UNITS};
use geoprobe::pipeline::{
    self, Dataset, IngestInputs, PairFeatures, PipelineError, ProbeChoice, RunConfig, Task,
};

#[derive(Parser)]
#[command(name = "geoprobe", version, about = "Probe embeddings of place names for geographic knowledge")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and cross-check input files without probing.
    Ingest(IngestArgs),
    /// Train a probe and its permutation controls, then score it.
    Probe(ProbeArgs),
    /// Intra/inter-country cosine similarity of city vectors.
    Similarity(SimilarityArgs),
    /// Rebuild aggregate tables from a directory of run outputs.
    Report(ReportArgs),
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    cities: Option<PathBuf>,
    #[arg(long)]
    countries: Option<PathBuf>,
    #[arg(long)]
    borders: Option<PathBuf>,
    /// Cities below this population are dropped on load.
    #[arg(long, default_value_t = DEFAULT_MIN_POPULATION)]
    min_population: u64,
    /// `mean`, `static`, or a context id 0-2.
    #[arg(long, default_value = "mean", value_parser = parse_pooling)]
    pooling: Pooling,
    #[arg(long, default_value_t = DEFAULT_MAX_MISSING_FRACTION)]
    max_missing: f64,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Gps,
    Population,
    Borders,
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Cities,
    Countries,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProbeArg {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum PenaltyArg {
    L1,
    L2,
}

#[derive(Clone, Copy, ValueEnum)]
enum PairArg {
    Concat,
    Symmetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Full,
    Train,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    task: TaskArg,
    #[arg(long, value_enum)]
    dataset: DatasetArg,
    /// Defaults to mlp for borders, linear otherwise.
    #[arg(long, value_enum)]
    probe: Option<ProbeArg>,
    #[arg(long, value_enum, default_value = "l1")]
    penalty: PenaltyArg,
    /// Defaults to 0.5 for gps and 1 otherwise.
    #[arg(long)]
    alpha: Option<f64>,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = DEFAULT_CONTROL_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training fraction of the holdout split.
    #[arg(long, default_value_t = 0.8)]
    split: f64,
    /// Cross-validate with this many folds (countries only).
    #[arg(long, num_args = 0..=1, default_missing_value = "5")]
    kfold: Option<usize>,
    /// Force a holdout split where cross-validation is the default.
    #[arg(long, conflicts_with = "kfold")]
    holdout: bool,
    #[arg(long, value_enum, default_value = "full")]
    permutation_scope: ScopeArg,
    #[arg(long, value_enum, default_value = "concat")]
    pair_features: PairArg,
    #[arg(long, default_value_t = DEFAULT_HIDDEN_UNITS)]
    hidden_units: usize,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimilarityArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    model_id: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding report and similarity JSON files.
    #[arg(long)]
    input: PathBuf,
    /// Defaults to the input directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_pooling(s: &str) -> Result<Pooling, String> {
    match s {
        "mean" => Ok(Pooling::Mean),
        "static" => Ok(Pooling::Single(ContextId::STATIC)),
        _ => match s.parse::<u8>() {
            Ok(c) if ContextId::TEMPLATES.contains(&ContextId(c)) => Ok(Pooling::Single(ContextId(c))),
            _ => Err(format!("expected mean, static, 0, 1 or 2; got {s}")),
        },
    }
}

fn require_embeddings(inputs: &Inputs) -> Result<PathBuf, PipelineError> {
    inputs
        .embeddings
        .clone()
        .ok_or_else(|| PipelineError::Config("--embeddings is required".into()))
}

fn base_config(task: Task, dataset: Dataset, inputs: &Inputs) -> Result<RunConfig, PipelineError> {
    let mut c = RunConfig::new(task, dataset, require_embeddings(inputs)?);
    c.cities = inputs.cities.clone();
    c.countries = inputs.countries.clone();
    c.borders = inputs.borders.clone();
    c.min_population = inputs.min_population;
    c.pooling = inputs.pooling;
    c.max_missing_fraction = inputs.max_missing;
    Ok(c)
}

fn probe_config(a: &ProbeArgs) -> Result<RunConfig, PipelineError> {
    let task = match a.task {
        TaskArg::Gps => Task::Gps,
        TaskArg::Population => Task::Population,
        TaskArg::Borders => Task::Borders,
    };
    let dataset = match a.dataset {
        DatasetArg::Cities => Dataset::Cities,
        DatasetArg::Countries => Dataset::Countries,
    };
    let mut c = base_config(task, dataset, &a.inputs)?;
    if let Some(p) = a.probe {
        c.probe = match p {
            ProbeArg::Linear => ProbeChoice::Linear,
            ProbeArg::Mlp => ProbeChoice::Mlp,
        };
    }
    c.penalty = match a.penalty {
        PenaltyArg::L1 => Penalty::L1,
        PenaltyArg::L2 => Penalty::L2,
    };
    c.alpha = a.alpha;
    c.n_trials = a.trials;
    c.seed = a.seed;
    c.train_fraction = a.split;
    if let Some(k) = a.kfold {
        c.k = k;
        c.cross_validation = Some(true);
    } else if a.holdout {
        c.cross_validation = Some(false);
    }
    c.permutation_scope = match a.permutation_scope {
        ScopeArg::Full => PermutationScope::FullDataset,
        ScopeArg::Train => PermutationScope::TrainOnly,
    };
    c.pair_features = match a.pair_features {
        PairArg::Concat => PairFeatures::Concat,
        PairArg::Symmetric => PairFeatures::Symmetric,
    };
    c.hidden_units = a.hidden_units;
    c.epochs = a.epochs;
    c.model_id = a.model_id.clone();
    c.out = a.out.clone();
    Ok(c)
}

fn describe(r: &ProbeReport) -> String {
    let control = r.control.as_ref().map_or(f64::NAN, |c| c.mean_error);
    let score = match r.score.kind {
        geoprobe::evaluation::ScoreKind::Per => "per",
        geoprobe::evaluation::ScoreKind::Selectivity => "selectivity",
    };
    format!(
        "{} {} {} {}: probe {:.4} control {:.4} ({}) {score} {:.4}{}",
        r.task.as_str(),
        r.dataset,
        r.probe_kind,
        r.model_id,
        r.task_error,
        control,
        r.units,
        r.score.value,
        if r.degenerate { " [degenerate]" } else { "" }
    )
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Output {
        path: path.to_path_buf(),
        source,
    };
    std::fs::create_dir_all(path.parent().unwrap_or(Path::new("."))).map_err(io)?;
    std::fs::write(path, text).map_err(io)
}

fn execute(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Ingest(a) => {
            let summary = pipeline::ingest(&IngestInputs {
                embeddings: a.inputs.embeddings.clone(),
                cities: a.inputs.cities.clone(),
                countries: a.inputs.countries.clone(),
                borders: a.inputs.borders.clone(),
                min_population: a.inputs.min_population,
                pooling: a.inputs.pooling,
                max_missing_fraction: a.inputs.max_missing,
            })?;
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            match &a.out {
                Some(dir) => {
                    let path = dir.join("ingest_summary.json");
                    write_text(&path, &text)?;
                    println!("wrote {}", path.display());
                }
                None => println!("{text}"),
            }
        }
        Command::Probe(a) => {
            let config = probe_config(&a)?;
            let out = pipeline::run(&config)?;
            for w in &out.run.report.warnings {
                log::warn!("{w}");
            }
            println!("{}", describe(&out.run.report));
            if config.out.is_none() {
                println!("{}", serde_json::to_string_pretty(&out.run.report).expect("report serializes"));
            }
            print_written(&out.written);
        }
        Command::Similarity(a) => {
            let mut config = base_config(Task::Similarity, Dataset::Cities, &a.inputs)?;
            config.model_id = a.model_id.clone();
            config.out = a.out.clone();
            let run = pipeline::run_similarity(&config)?;
            let s = &run.record.summary;
            println!(
                "{}: intra {:.4} inter {:.4} gap {:.4} ({} intra pairs, {} inter pairs)",
                run.record.model_id, s.intra_mean, s.inter_mean, s.gap, s.intra_count, s.inter_count
            );
            print_written(&run.written);
        }
        Command::Report(a) => {
            let reports = pipeline::load_reports(&a.input)?;
            let sims = pipeline::load_similarity(&a.input)?;
            if reports.is_empty() && sims.is_empty() {
                return Err(PipelineError::Config(format!("no reports found in {}", a.input.display())));
            }
            for r in &reports {
                r.verify()?;
            }
            let out = a.out.unwrap_or(a.input);
            print_written(&pipeline::write_tables(&reports, &sims, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
