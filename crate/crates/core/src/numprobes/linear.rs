use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{ensure_finite, ProbeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    /// `alpha * sum |w|` (Lasso).
    #[default]
    L1,
    /// `alpha * 0.5 * sum w^2` (ridge).
    L2,
}

impl std::fmt::Display for Penalty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Penalty::L1 => "l1",
            Penalty::L2 => "l2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub penalty: Penalty,
    pub alpha: f64,
    /// Stop once the largest coefficient change in a sweep is below this.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            penalty: Penalty::L1,
            alpha: 1.0,
            tol: 1e-6,
            max_sweeps: 1000,
        }
    }
}

impl LinearConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        LinearConfig {
            alpha,
            ..Default::default()
        }
    }
}

/// `Y ≈ X W + b` with one independent coefficient column per target.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// D × T
    pub weights: Array2<f64>,
    /// T
    pub intercept: Array1<f64>,
    pub penalty: Penalty,
    pub alpha: f64,
    pub converged: bool,
    pub sweeps: usize,
    /// Training objective after each sweep, per target column.
    pub objective_trace: Vec<Vec<f64>>,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_targets(&self) -> usize {
        self.weights.ncols()
    }
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Minimizes `(1/2N) ||y - X w - b||^2 + alpha * penalty(w)` per target
/// column by cyclic coordinate descent. The intercept is unpenalized and
/// handled by centering.
///
/// Hitting `max_sweeps` is not an error; the model comes back with
/// `converged == false`.
pub fn fit_linear(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, config: &LinearConfig) -> Result<LinearModel> {
    let (n, d) = x.dim();
    if y.nrows() != n {
        return Err(ProbeError::Dimension(format!("X has {n} rows, Y has {}", y.nrows())));
    }
    if n == 0 {
        return Err(ProbeError::Dimension("no training rows".into()));
    }
    if !(config.alpha >= 0.0 && config.alpha.is_finite()) {
        return Err(ProbeError::Config(format!("alpha must be >= 0, got {}", config.alpha)));
    }
    ensure_finite(x.iter(), "features")?;
    ensure_finite(y.iter(), "targets")?;

    let nf = n as f64;
    let x_mean = x.mean_axis(Axis(0)).expect("n > 0");
    let y_mean = y.mean_axis(Axis(0)).expect("n > 0");
    // column-major centered copy: columns[j] is feature j
    let columns: Vec<Vec<f64>> = x
        .axis_iter(Axis(1))
        .zip(x_mean.iter())
        .map(|(c, &m)| c.iter().map(|v| v - m).collect())
        .collect();
    let col_sq: Vec<f64> = columns.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let alpha = config.alpha;
    let objective = |r: &[f64], w: &[f64]| {
        let fit = r.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf);
        let pen = match config.penalty {
            Penalty::L1 => w.iter().map(|v| v.abs()).sum::<f64>(),
            Penalty::L2 => 0.5 * w.iter().map(|v| v * v).sum::<f64>(),
        };
        fit + alpha * pen
    };

    let t_count = y.ncols();
    let mut weights = Array2::zeros((d, t_count));
    let mut traces = Vec::with_capacity(t_count);
    let mut converged = true;
    let mut max_sweeps_used = 0;

    for t in 0..t_count {
        let mut r: Vec<f64> = y.column(t).iter().map(|v| v - y_mean[t]).collect();
        let mut w = vec![0.0; d];
        let mut trace = Vec::new();
        let mut done = false;
        let mut sweeps = 0;
        while sweeps < config.max_sweeps {
            sweeps += 1;
            let mut max_change = 0.0f64;
            for j in 0..d {
                let z = col_sq[j];
                if z == 0.0 {
                    continue;
                }
                let col = &columns[j];
                let old = w[j];
                let rho = col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf + z * old;
                let new = match config.penalty {
                    Penalty::L1 => soft_threshold(rho, alpha) / z,
                    Penalty::L2 => rho / (z + alpha),
                };
                let delta = new - old;
                if delta != 0.0 {
                    for (ri, ci) in r.iter_mut().zip(col) {
                        *ri -= delta * ci;
                    }
                    w[j] = new;
                    max_change = max_change.max(delta.abs());
                }
            }
            trace.push(objective(&r, &w));
            if max_change < config.tol {
                done = true;
                break;
            }
        }
        converged &= done;
        max_sweeps_used = max_sweeps_used.max(sweeps);
        for (j, wj) in w.into_iter().enumerate() {
            weights[[j, t]] = wj;
        }
        traces.push(trace);
    }

    let intercept = &y_mean - &x_mean.dot(&weights);
    ensure_finite(weights.iter(), "fitted weights")?;
    Ok(LinearModel {
        weights,
        intercept,
        penalty: config.penalty,
        alpha,
        converged,
        sweeps: max_sweeps_used,
        objective_trace: traces,
    })
}

pub fn predict_linear(model: &LinearModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.ncols() != model.n_features() {
        return Err(ProbeError::Dimension(format!(
            "model has {} features, input has {}",
            model.n_features(),
            x.ncols()
        )));
    }
    Ok(x.dot(&model.weights) + &model.intercept)
}
