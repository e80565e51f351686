use serde::{Deserialize, Serialize};

use super::{Result, SimError};

pub const DEFAULT_BINS: usize = 50;

/// Equal-width bins over `[low, high]`.
///
/// Bins are half-open `[left, right)`, except the last one which also
/// takes `high`. Values outside the range land in `underflow`/`overflow`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub low: f64,
    pub high: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn empty(bins: usize, low: f64, high: f64) -> Result<Self> {
        if bins == 0 {
            return Err(SimError::InvalidHistogram("bin count must be at least 1".into()));
        }
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(SimError::InvalidHistogram(format!("invalid range [{low}, {high}]")));
        }
        Ok(Histogram {
            low,
            high,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.counts.len() {
            return self.high;
        }
        self.low + (self.high - self.low) * i as f64 / self.counts.len() as f64
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.counts.len()).map(|i| self.edge(i)).collect()
    }

    /// Bin index for `v`, or `None` when it falls outside the range.
    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.low && v <= self.high) {
            return None;
        }
        let n = self.counts.len();
        if v == self.high {
            return Some(n - 1);
        }
        let mut i = (((v - self.low) / (self.high - self.low)) * n as f64).floor() as usize;
        i = i.min(n - 1);
        // Keep the index consistent with the reported edges under rounding.
        if v < self.edge(i) {
            i -= 1;
        } else if i + 1 < n && v >= self.edge(i + 1) {
            i += 1;
        }
        Some(i)
    }

    pub fn add(&mut self, v: f64) {
        match self.bin_of(v) {
            Some(i) => self.counts[i] += 1,
            None if v < self.low => self.underflow += 1,
            None => self.overflow += 1,
        }
    }

    /// Adds another histogram with identical binning.
    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.underflow += other.underflow;
        self.overflow += other.overflow;
    }

    pub fn in_range(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn histogram(values: &[f64], bins: usize, low: f64, high: f64) -> Result<Histogram> {
    let mut h = Histogram::empty(bins, low, high)?;
    for &v in values {
        if v.is_nan() {
            return Err(SimError::InvalidHistogram("NaN value".into()));
        }
        h.add(v);
    }
    Ok(h)
}
