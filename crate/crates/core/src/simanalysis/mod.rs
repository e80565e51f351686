//! Intra- versus inter-country cosine similarity over city vectors.

mod histogram;
mod render;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use histogram::{histogram, Histogram, DEFAULT_BINS};
pub use render::{histogram_tsv, overlay_svg, summary_tsv};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("zero vector at row {0}")]
    ZeroVector(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("{0} labels for {1} vectors")]
    LengthMismatch(usize, usize),
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("degenerate analysis: {0}")]
    Degenerate(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(SimError::Dimension(u.len(), v.len()));
    }
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 {
        return Err(SimError::ZeroVector(0));
    }
    if nv == 0.0 {
        return Err(SimError::ZeroVector(1));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub low: f64,
    pub high: f64,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec {
            bins: DEFAULT_BINS,
            low: -1.0,
            high: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub intra_mean: f64,
    pub inter_mean: f64,
    pub gap: f64,
    pub intra_count: u64,
    pub inter_count: u64,
    /// Both histograms share the same edges.
    pub intra_histogram: Histogram,
    pub inter_histogram: Histogram,
}

#[derive(Clone)]
struct Partial {
    intra_sum: f64,
    intra_n: u64,
    inter_sum: f64,
    inter_n: u64,
    intra: Histogram,
    inter: Histogram,
}

/// All unordered city pairs, split by whether both cities share a country.
pub fn pairwise_intra_inter<S: AsRef<str> + Sync>(
    countries: &[S],
    x: ArrayView2<f64>,
    spec: &HistogramSpec,
) -> Result<SimilaritySummary> {
    let n = x.nrows();
    if countries.len() != n {
        return Err(SimError::LengthMismatch(countries.len(), n));
    }
    if n < 2 {
        return Err(SimError::Degenerate("need at least two cities".into()));
    }
    let first = countries[0].as_ref();
    if countries.iter().all(|c| c.as_ref() == first) {
        return Err(SimError::Degenerate(format!("all cities are in {first}, no inter-country pairs")));
    }
    let empty = Histogram::empty(spec.bins, spec.low, spec.high)?;

    let mut unit = x.to_owned();
    for (i, mut row) in unit.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(SimError::ZeroVector(i));
        }
        row /= norm;
    }

    let partials: Vec<Partial> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut p = Partial {
                intra_sum: 0.0,
                intra_n: 0,
                inter_sum: 0.0,
                inter_n: 0,
                intra: empty.clone(),
                inter: empty.clone(),
            };
            let ri = unit.row(i);
            for j in i + 1..n {
                let c = ri.dot(&unit.row(j)).clamp(-1.0, 1.0);
                if countries[i].as_ref() == countries[j].as_ref() {
                    p.intra_sum += c;
                    p.intra_n += 1;
                    p.intra.add(c);
                } else {
                    p.inter_sum += c;
                    p.inter_n += 1;
                    p.inter.add(c);
                }
            }
            p
        })
        .collect();

    let mut total = Partial {
        intra_sum: 0.0,
        intra_n: 0,
        inter_sum: 0.0,
        inter_n: 0,
        intra: empty.clone(),
        inter: empty,
    };
    for p in &partials {
        total.intra_sum += p.intra_sum;
        total.intra_n += p.intra_n;
        total.inter_sum += p.inter_sum;
        total.inter_n += p.inter_n;
        total.intra.merge(&p.intra);
        total.inter.merge(&p.inter);
    }
    if total.intra_n == 0 {
        log::warn!("no country has two cities; intra mean is undefined");
    }
    let intra_mean = if total.intra_n > 0 {
        total.intra_sum / total.intra_n as f64
    } else {
        f64::NAN
    };
    let inter_mean = total.inter_sum / total.inter_n as f64;
    Ok(SimilaritySummary {
        intra_mean,
        inter_mean,
        gap: intra_mean - inter_mean,
        intra_count: total.intra_n,
        inter_count: total.inter_n,
        intra_histogram: total.intra,
        inter_histogram: total.inter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn cosine_examples() {
        assert!((cosine(&[1.0, 0.0], &[0.0, 2.0]).unwrap()).abs() < 1e-15);
        assert_eq!(cosine(&[1.0, 1.0], &[3.0, 3.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(SimError::ZeroVector(0))));
        assert!(matches!(cosine(&[1.0], &[1.0, 0.0]), Err(SimError::Dimension(1, 2))));
    }

    #[test]
    fn two_identical_clusters() {
        let a = [1.0, 2.0, 0.5];
        let b = [-0.3, 1.0, 2.0];
        let x = array![
            [a[0], a[1], a[2]],
            [a[0], a[1], a[2]],
            [a[0], a[1], a[2]],
            [b[0], b[1], b[2]],
            [b[0], b[1], b[2]]
        ];
        let c = ["FR", "FR", "FR", "DE", "DE"];
        let s = pairwise_intra_inter(&c, x.view(), &HistogramSpec::default()).unwrap();
        assert!((s.intra_mean - 1.0).abs() < 1e-12);
        let oracle = {
            let dot: f64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
            let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|p| p * p).sum::<f64>().sqrt();
            dot / (na * nb)
        };
        assert!((s.inter_mean - oracle).abs() < 1e-12);
        assert_eq!(s.intra_count, 3 + 1);
        assert_eq!(s.inter_count, 6);
        assert_eq!(s.intra_histogram.counts[DEFAULT_BINS - 1], 4);
        assert!((s.gap - (s.intra_mean - s.inter_mean)).abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(matches!(
            pairwise_intra_inter(&["FR", "FR"], x.view(), &HistogramSpec::default()),
            Err(SimError::Degenerate(_))
        ));
        assert!(pairwise_intra_inter(&["FR"], x.slice(ndarray::s![..1, ..]), &HistogramSpec::default()).is_err());
        let z = array![[1.0, 0.0], [0.0, 0.0]];
        assert!(matches!(
            pairwise_intra_inter(&["FR", "DE"], z.view(), &HistogramSpec::default()),
            Err(SimError::ZeroVector(1))
        ));
        assert!(pairwise_intra_inter(&["FR"], x.view(), &HistogramSpec::default()).is_err());
    }

    #[test]
    fn singleton_countries_have_no_intra_pairs() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let s = pairwise_intra_inter(&["FR", "DE", "IT"], x.view(), &HistogramSpec::default()).unwrap();
        assert_eq!(s.intra_count, 0);
        assert!(s.intra_mean.is_nan());
        assert_eq!(s.inter_count, 3);
    }

    fn random_input(seed: u64, n: usize, d: usize) -> (Vec<String>, Array2<f64>) {
        let mut rng = crate::rng::seeded_rng(seed);
        let labels = (0..n).map(|_| ["AA", "BB", "CC", "DD"][rng.gen_range(0..4)].to_string()).collect();
        let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-1.0..1.0));
        (labels, x)
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(
            u in prop::collection::vec(-5.0f64..5.0, 4),
            v in prop::collection::vec(-5.0f64..5.0, 4),
            a in 0.01f64..100.0,
            b in 0.01f64..100.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let su: Vec<f64> = u.iter().map(|x| a * x).collect();
            let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
            let c = cosine(&u, &v).unwrap();
            prop_assert!((-1.0..=1.0).contains(&c));
            prop_assert!((cosine(&su, &sv).unwrap() - c).abs() < 1e-12);
        }

        #[test]
        fn pair_counts_and_order_invariance(seed in 0u64..500, n in 2usize..40) {
            let (labels, x) = random_input(seed, n, 5);
            prop_assume!(labels.iter().any(|l| l != &labels[0]));
            let s = pairwise_intra_inter(&labels, x.view(), &HistogramSpec::default()).unwrap();
            prop_assert_eq!(s.intra_count + s.inter_count, (n * (n - 1) / 2) as u64);
            prop_assert_eq!(s.intra_histogram.in_range(), s.intra_count);
            prop_assert_eq!(s.inter_histogram.in_range(), s.inter_count);

            let order: Vec<usize> = (0..n).rev().collect();
            let labels_r: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
            let x_r = x.select(ndarray::Axis(0), &order);
            let r = pairwise_intra_inter(&labels_r, x_r.view(), &HistogramSpec::default()).unwrap();
            prop_assert_eq!(r.intra_count, s.intra_count);
            prop_assert_eq!(r.inter_count, s.inter_count);
            prop_assert!((r.inter_mean - s.inter_mean).abs() < 1e-12);
            prop_assert!(s.intra_count == 0 || (r.intra_mean - s.intra_mean).abs() < 1e-12);
        }
    }
}
