use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::embedstore::{Pooling, DEFAULT_MAX_MISSING_FRACTION};
use crate::evaluation::{PermutationScope, DEFAULT_CONTROL_TRIALS};
use crate::geodata::{PairStrategy, SplitSpec, DEFAULT_MIN_POPULATION};
use crate::numprobes::{LinearConfig, MlpConfig, MlpTask, Penalty, ProbeConfig, DEFAULT_HIDDEN_UNITS};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Gps,
    Population,
    Borders,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Cities,
    Countries,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Cities => "cities",
            Dataset::Countries => "countries",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeChoice {
    Linear,
    Mlp,
}

/// How a pair of country vectors becomes one classifier input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairFeatures {
    /// `[u; v]`, with both orderings of every pair as separate rows.
    #[default]
    Concat,
    /// `[u + v; |u - v|]`, one row per pair.
    Symmetric,
}

impl PairFeatures {
    pub fn as_str(self) -> &'static str {
        match self {
            PairFeatures::Concat => "concat",
            PairFeatures::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub task: Task,
    pub dataset: Dataset,
    pub probe: ProbeChoice,
    pub penalty: Penalty,
    /// Defaults to 0.5 for GPS and 1 otherwise.
    pub alpha: Option<f64>,
    pub train_fraction: f64,
    pub k: usize,
    /// Defaults to cross-validation for country population only.
    pub cross_validation: Option<bool>,
    pub n_trials: usize,
    pub seed: u64,
    pub pooling: Pooling,
    pub permutation_scope: PermutationScope,
    pub pair_features: PairFeatures,
    pub pair_strategy: PairStrategy,
    pub hidden_units: usize,
    pub epochs: usize,
    pub min_population: u64,
    pub max_missing_fraction: f64,
    pub embeddings: PathBuf,
    pub cities: Option<PathBuf>,
    pub countries: Option<PathBuf>,
    pub borders: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Defaults to the sidecar's model id, then the store file stem.
    pub model_id: Option<String>,
}

impl RunConfig {
    pub fn new(task: Task, dataset: Dataset, embeddings: impl Into<PathBuf>) -> Self {
        RunConfig {
            task,
            dataset,
            probe: if task == Task::Borders {
                ProbeChoice::Mlp
            } else {
                ProbeChoice::Linear
            },
            penalty: Penalty::L1,
            alpha: None,
            train_fraction: 0.8,
            k: 5,
            cross_validation: None,
            n_trials: DEFAULT_CONTROL_TRIALS,
            seed: 0,
            pooling: Pooling::Mean,
            permutation_scope: PermutationScope::FullDataset,
            pair_features: PairFeatures::Concat,
            pair_strategy: PairStrategy::Balanced,
            hidden_units: DEFAULT_HIDDEN_UNITS,
            epochs: 200,
            min_population: DEFAULT_MIN_POPULATION,
            max_missing_fraction: DEFAULT_MAX_MISSING_FRACTION,
            embeddings: embeddings.into(),
            cities: None,
            countries: None,
            borders: None,
            out: None,
            model_id: None,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(if self.task == Task::Gps { 0.5 } else { 1.0 })
    }

    pub fn uses_cross_validation(&self) -> bool {
        self.cross_validation
            .unwrap_or(self.task == Task::Population && self.dataset == Dataset::Countries)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            k: self.k,
        }
    }

    pub fn control_seed(&self) -> u64 {
        derive_seed(self.seed, 1)
    }

    pub fn model_seed(&self) -> u64 {
        derive_seed(self.seed, 2)
    }

    pub fn pair_seed(&self) -> u64 {
        derive_seed(self.seed, 3)
    }

    pub fn probe_config(&self) -> ProbeConfig {
        match self.probe {
            ProbeChoice::Linear => ProbeConfig::Linear(LinearConfig {
                penalty: self.penalty,
                alpha: self.alpha(),
                ..LinearConfig::default()
            }),
            ProbeChoice::Mlp => {
                let task = if self.task == Task::Borders {
                    MlpTask::BinaryClassification
                } else {
                    MlpTask::Regression
                };
                ProbeConfig::Mlp(MlpConfig {
                    hidden_units: self.hidden_units,
                    epochs: self.epochs,
                    ..MlpConfig::new(task, self.model_seed())
                })
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.task == Task::Borders && self.dataset != Dataset::Countries {
            return bad("the borders task requires the countries dataset".into());
        }
        if self.task == Task::Borders && self.probe != ProbeChoice::Mlp {
            return bad("the borders task uses the mlp probe".into());
        }
        if self.task == Task::Similarity && self.dataset != Dataset::Cities {
            return bad("the similarity analysis runs on cities".into());
        }
        if self.cross_validation == Some(true) && self.dataset != Dataset::Countries {
            return bad("k-fold cross-validation is only available for the countries dataset".into());
        }
        if self.cross_validation == Some(true) && self.task == Task::Borders {
            return bad("the borders task uses a single holdout split".into());
        }
        let a = self.alpha();
        if !(a.is_finite() && a >= 0.0) {
            return bad(format!("alpha must be finite and non-negative, got {a}"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("split fraction must be in (0, 1), got {}", self.train_fraction));
        }
        if self.k < 2 {
            return bad(format!("fold count must be at least 2, got {}", self.k));
        }
        if self.n_trials == 0 {
            return bad("at least one control trial is required".into());
        }
        if self.probe == ProbeChoice::Mlp && (self.hidden_units == 0 || self.epochs == 0) {
            return bad("mlp needs at least one hidden unit and one epoch".into());
        }
        if !(0.0..=1.0).contains(&self.max_missing_fraction) {
            return bad(format!("max missing fraction {} not in [0, 1]", self.max_missing_fraction));
        }
        let needs_cities = self.dataset == Dataset::Cities;
        if needs_cities && self.cities.is_none() {
            return bad("--cities is required for the cities dataset".into());
        }
        if !needs_cities && self.countries.is_none() {
            return bad("--countries is required for the countries dataset".into());
        }
        if self.task == Task::Borders && self.borders.is_none() {
            return bad("--borders is required for the borders task".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(task: Task, dataset: Dataset) -> RunConfig {
        let mut c = RunConfig::new(task, dataset, "e.gemb");
        c.cities = Some("c.csv".into());
        c.countries = Some("k.csv".into());
        c.borders = Some("b.txt".into());
        c
    }

    #[test]
    fn defaults() {
        let c = cfg(Task::Gps, Dataset::Cities);
        assert_eq!(c.alpha(), 0.5);
        assert!(!c.uses_cross_validation());
        assert_eq!(cfg(Task::Population, Dataset::Cities).alpha(), 1.0);
        assert!(cfg(Task::Population, Dataset::Countries).uses_cross_validation());
        assert!(!cfg(Task::Gps, Dataset::Countries).uses_cross_validation());
        assert_eq!(cfg(Task::Borders, Dataset::Countries).probe, ProbeChoice::Mlp);
        c.validate().unwrap();
    }

    #[test]
    fn invariants() {
        assert!(cfg(Task::Borders, Dataset::Cities).validate().is_err());
        let mut c = cfg(Task::Population, Dataset::Cities);
        c.cross_validation = Some(true);
        assert!(c.validate().is_err());
        let mut c = cfg(Task::Borders, Dataset::Countries);
        c.probe = ProbeChoice::Linear;
        assert!(c.validate().is_err());
        let mut c = cfg(Task::Gps, Dataset::Cities);
        c.alpha = Some(-1.0);
        assert!(c.validate().is_err());
        c.alpha = None;
        c.cities = None;
        assert!(c.validate().is_err());
        let mut c = cfg(Task::Gps, Dataset::Cities);
        c.n_trials = 0;
        assert!(c.validate().is_err());
    }
}
