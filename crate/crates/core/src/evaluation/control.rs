//! Permutation control tasks.
//!
//! A control trial retrains the same probe on targets shuffled by a
//! trial-specific seed and records its test error. The control error is the
//! arithmetic mean over trials.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::rng::{derive_seed, seeded_rng};

pub const DEFAULT_CONTROL_TRIALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlStats {
    /// Ordered by trial index.
    pub trial_errors: Vec<f64>,
    pub mean_error: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl ControlStats {
    pub fn from_trials(trial_errors: Vec<f64>, seed: u64) -> Result<Self> {
        if trial_errors.is_empty() {
            return Err(EvalError::Empty);
        }
        let mean_error = mean(&trial_errors);
        Ok(ControlStats {
            n_trials: trial_errors.len(),
            trial_errors,
            mean_error,
            seed,
        })
    }

    /// `mean_error` and `n_trials` agree with `trial_errors`.
    pub fn is_consistent(&self) -> bool {
        !self.trial_errors.is_empty()
            && self.n_trials == self.trial_errors.len()
            && self.mean_error == mean(&self.trial_errors)
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Which targets a control trial shuffles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationScope {
    /// Shuffle over the whole dataset, then split. Test targets are permuted too.
    #[default]
    FullDataset,
    /// Shuffle only among training rows; test targets stay real.
    TrainOnly,
}

/// Identity of one control trial, handed to the trial closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlTrial {
    pub index: usize,
    /// Derived from the control seed and `index`.
    pub seed: u64,
}

impl ControlTrial {
    pub fn new(control_seed: u64, index: usize) -> Self {
        ControlTrial {
            index,
            seed: derive_seed(control_seed, index as u64),
        }
    }
}

/// A uniformly random permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut seeded_rng(seed));
    p
}

/// `values` reordered by [`permutation`].
pub fn permute<T: Clone>(values: &[T], seed: u64) -> Vec<T> {
    permutation(values.len(), seed).into_iter().map(|i| values[i].clone()).collect()
}

/// Exact multiset equality of two float slices (bitwise after sorting).
pub fn same_multiset(a: &[f64], b: &[f64]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let sorted = |v: &[f64]| {
        let mut s: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
        s.sort_unstable();
        s
    };
    sorted(a) == sorted(b)
}

/// Runs `n_trials` independent control trials, in parallel, and aggregates
/// their errors in trial order.
///
/// `trial` must build its permuted dataset from `ControlTrial::seed`, retrain
/// and return the test error. Failures are tagged with the trial index.
pub fn run_control<F, E>(n_trials: usize, seed: u64, trial: F) -> Result<ControlStats>
where
    F: Fn(&ControlTrial) -> std::result::Result<f64, E> + Sync,
    E: std::error::Error + Send + Sync + 'static,
{
    if n_trials == 0 {
        return Err(EvalError::Invalid("n_trials must be at least 1".into()));
    }
    let errors: Vec<f64> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let t = ControlTrial::new(seed, i);
            trial(&t).map_err(|e| EvalError::Trial {
                index: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    ControlStats::from_trials(errors, seed)
}
