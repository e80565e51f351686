use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{GeoError, Result};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    /// Fold count for cross-validation.
    pub k: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
            k: 5,
        }
    }
}

/// Index partition; both halves sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded_rng(seed));
    idx
}

/// Random train/test split of `0..n` with `round(train_fraction * n)` train
/// indices, kept within `[1, n - 1]` so neither side is empty.
pub fn split(n: usize, spec: &SplitSpec) -> Result<Split> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(GeoError::Split(format!("train_fraction {f} not in (0, 1)")));
    }
    if n < 5 {
        return Err(GeoError::Split(format!("need at least 5 items, got {n}")));
    }
    let n_train = ((f * n as f64).round() as usize).clamp(1, n - 1);
    let idx = shuffled(n, spec.seed);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// `spec.k` shuffled folds; the first `n % k` test folds get one extra item.
pub fn kfold(n: usize, spec: &SplitSpec) -> Result<Vec<Split>> {
    let k = spec.k;
    if k < 2 {
        return Err(GeoError::Split(format!("fold count must be at least 2, got {k}")));
    }
    if k > n {
        return Err(GeoError::Split(format!("{k} folds for only {n} items")));
    }
    let idx = shuffled(n, spec.seed);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = idx[start..start + size].to_vec();
        let mut train: Vec<usize> = idx[..start].iter().chain(&idx[start + size..]).copied().collect();
        test.sort_unstable();
        train.sort_unstable();
        folds.push(Split { train, test });
        start += size;
    }
    Ok(folds)
}
