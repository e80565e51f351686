#![allow(dead_code)]

use geoprobe::evaluation::PermutationScope;
use geoprobe::geodata::{BorderGraph, GeoPoint, PairStrategy, SplitSpec};
use geoprobe::numprobes::{LinearConfig, MlpConfig, MlpTask, ProbeConfig};
use geoprobe::pipeline::{PairFeatures, ProbeOptions, ReportMeta};
use geoprobe::rng::seeded_rng;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<GeoPoint> {
    (0..n)
        .map(|_| GeoPoint::new(rng.gen_range(-60.0..70.0), rng.gen_range(-180.0..180.0)).unwrap())
        .collect()
}

/// Rows are `G (lat, lon)` for a random `D x 2` matrix `G`, plus Gaussian
/// noise at `noise_frac` of the signal's standard deviation.
pub fn linear_gps(n: usize, d: usize, noise_frac: f64, seed: u64) -> (Array2<f64>, Vec<GeoPoint>) {
    let mut rng = seeded_rng(seed);
    let pts = random_points(&mut rng, n);
    let g = gaussian(&mut rng, d, 2);
    let coords = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { pts[i].lat() } else { pts[i].lon() });
    let signal = coords.dot(&g.t());
    let mean = signal.mean().unwrap();
    let sd = (signal.mapv(|v| (v - mean).powi(2)).mean().unwrap()).sqrt();
    let noise = gaussian(&mut rng, n, d) * (noise_frac * sd);
    (signal + noise, pts)
}

pub fn code(i: usize) -> String {
    let bytes = [b'A' + (i / 26) as u8, b'A' + (i % 26) as u8];
    String::from_utf8(bytes.to_vec()).unwrap()
}

/// Countries on a `side x side` grid, bordering their 4-neighbours. Vectors
/// are a noisy linear image of the grid position.
pub fn grid_countries(side: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<String>, BorderGraph) {
    let mut rng = seeded_rng(seed);
    let n = side * side;
    let codes: Vec<String> = (0..n).map(code).collect();
    let mut graph = BorderGraph::new(codes.clone());
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            if c + 1 < side {
                graph.add_edge(&codes[i], &codes[i + 1]).unwrap();
            }
            if r + 1 < side {
                graph.add_edge(&codes[i], &codes[i + side]).unwrap();
            }
        }
    }
    let g = gaussian(&mut rng, 2, d);
    let pos = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { (i / side) as f64 } else { (i % side) as f64 });
    let x = pos.dot(&g) + gaussian(&mut rng, n, d) * 0.05;
    (x, codes, graph)
}

/// Countries in fully connected clusters with no borders between clusters.
/// Members of a cluster share one random vector up to tiny noise.
pub fn clustered_countries(clusters: usize, size: usize, d: usize, seed: u64) -> (Array2<f64>, Vec<String>, BorderGraph) {
    let mut rng = seeded_rng(seed);
    let n = clusters * size;
    let codes: Vec<String> = (0..n).map(code).collect();
    let mut graph = BorderGraph::new(codes.clone());
    for k in 0..clusters {
        for a in 0..size {
            for b in a + 1..size {
                graph.add_edge(&codes[k * size + a], &codes[k * size + b]).unwrap();
            }
        }
    }
    let centers = gaussian(&mut rng, clusters, d);
    let x = Array2::from_shape_fn((n, d), |(i, j)| centers[[i / size, j]]) + gaussian(&mut rng, n, d) * 1e-3;
    (x, codes, graph)
}

pub fn linear_options(alpha: f64, seed: u64) -> ProbeOptions {
    ProbeOptions {
        probe: ProbeConfig::Linear(LinearConfig::with_alpha(alpha)),
        split: SplitSpec {
            seed,
            ..SplitSpec::default()
        },
        cross_validation: false,
        n_trials: 10,
        control_seed: seed.wrapping_add(1000),
        permutation_scope: PermutationScope::FullDataset,
        pair_features: PairFeatures::Concat,
        pair_strategy: PairStrategy::Balanced,
        pair_seed: seed,
    }
}

pub fn mlp_options(task: MlpTask, seed: u64) -> ProbeOptions {
    ProbeOptions {
        probe: ProbeConfig::Mlp(MlpConfig::new(task, seed)),
        ..linear_options(1.0, seed)
    }
}

pub fn meta(model: &str, dataset: &str) -> ReportMeta {
    ReportMeta {
        model_id: model.into(),
        dataset: dataset.into(),
        ..ReportMeta::default()
    }
}
