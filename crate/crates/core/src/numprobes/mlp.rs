use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ensure_finite, ProbeError, Result};
use crate::rng::seeded_rng;

pub const DEFAULT_HIDDEN_UNITS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MlpTask {
    /// Linear output, mean squared error.
    Regression,
    /// Sigmoid output per column, mean binary cross-entropy.
    BinaryClassification,
}

/// Training hyperparameters. Adam with the usual moment decay rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_units: usize,
    pub task: MlpTask,
    pub seed: u64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Stop after this many epochs without relative improvement of `tol`.
    pub patience: usize,
    pub tol: f64,
}

impl MlpConfig {
    pub fn new(task: MlpTask, seed: u64) -> Self {
        MlpConfig {
            hidden_units: DEFAULT_HIDDEN_UNITS,
            task,
            seed,
            epochs: 200,
            learning_rate: 1e-3,
            batch_size: 32,
            patience: 20,
            tol: 1e-4,
        }
    }
}

/// ReLU hidden layer, linear or sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// D × H
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// H × T
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub task: MlpTask,
    pub seed: u64,
    /// Full-batch training loss of the returned parameters.
    pub final_loss: f64,
    pub epochs_run: usize,
    /// Mean mini-batch loss per epoch.
    pub loss_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl MlpModel {
    /// Glorot-uniform initialization of all weights and biases.
    pub fn init(n_features: usize, n_targets: usize, hidden_units: usize, task: MlpTask, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut glorot = |fan_in: usize, fan_out: usize, shape: (usize, usize)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            Array2::from_shape_fn(shape, |_| rng.gen_range(-limit..limit))
        };
        let w1 = glorot(n_features, hidden_units, (n_features, hidden_units));
        let b1 = glorot(n_features, hidden_units, (1, hidden_units)).remove_axis(Axis(0));
        let w2 = glorot(hidden_units, n_targets, (hidden_units, n_targets));
        let b2 = glorot(hidden_units, n_targets, (1, n_targets)).remove_axis(Axis(0));
        MlpModel {
            w1,
            b1,
            w2,
            b2,
            task,
            seed,
            final_loss: f64::NAN,
            epochs_run: 0,
            loss_history: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_units(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_targets(&self) -> usize {
        self.w2.ncols()
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let z1 = x.dot(&self.w1) + &self.b1;
        let h = z1.mapv(|v| v.max(0.0));
        let out = h.dot(&self.w2) + &self.b2;
        (z1, h, out)
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.n_features() {
            return Err(ProbeError::Dimension(format!(
                "model has {} features, input has {}",
                self.n_features(),
                x.ncols()
            )));
        }
        Ok(())
    }

    fn check_batch(&self, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
        self.check_input(x)?;
        if x.nrows() == 0 {
            return Err(ProbeError::Dimension("empty batch".into()));
        }
        if y.dim() != (x.nrows(), self.n_targets()) {
            return Err(ProbeError::Dimension(format!(
                "targets are {:?}, expected ({}, {})",
                y.dim(),
                x.nrows(),
                self.n_targets()
            )));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn loss_of(task: MlpTask, out: &Array2<f64>, y: ArrayView2<'_, f64>) -> f64 {
    let count = out.len() as f64;
    let total: f64 = match task {
        MlpTask::Regression => Zip::from(out).and(y).fold(0.0, |acc, &o, &t| acc + (o - t) * (o - t)),
        MlpTask::BinaryClassification => Zip::from(out).and(y).fold(0.0, |acc, &o, &t| acc + softplus(o) - t * o),
    };
    total / count
}

/// Gradient of the loss with respect to the output pre-activations.
fn output_delta(task: MlpTask, out: &Array2<f64>, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let count = out.len() as f64;
    let mut delta = out.clone();
    match task {
        MlpTask::Regression => Zip::from(&mut delta).and(y).for_each(|d, &t| *d = 2.0 * (*d - t) / count),
        MlpTask::BinaryClassification => {
            Zip::from(&mut delta).and(y).for_each(|d, &t| *d = (sigmoid(*d) - t) / count)
        }
    }
    delta
}

fn backprop(model: &MlpModel, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> (f64, MlpGradients) {
    let (z1, h, out) = model.forward(x);
    let loss = loss_of(model.task, &out, y);
    let d_out = output_delta(model.task, &out, y);
    let g_w2 = h.t().dot(&d_out);
    let g_b2 = d_out.sum_axis(Axis(0));
    let mut d_hidden = d_out.dot(&model.w2.t());
    Zip::from(&mut d_hidden).and(&z1).for_each(|d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    let g_w1 = x.t().dot(&d_hidden);
    let g_b1 = d_hidden.sum_axis(Axis(0));
    (
        loss,
        MlpGradients {
            w1: g_w1,
            b1: g_b1,
            w2: g_w2,
            b2: g_b2,
        },
    )
}

/// Mean loss over all entries of the batch.
pub fn mlp_loss(model: &MlpModel, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<f64> {
    model.check_batch(x, y)?;
    let (_, _, out) = model.forward(x);
    Ok(loss_of(model.task, &out, y))
}

/// Exact backpropagation gradients of [`mlp_loss`].
pub fn mlp_gradient(model: &MlpModel, x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<MlpGradients> {
    model.check_batch(x, y)?;
    Ok(backprop(model, x, y).1)
}

/// Regression outputs, or probabilities in `(0, 1)` for classification.
pub fn predict_mlp(model: &MlpModel, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    model.check_input(x)?;
    let (_, _, out) = model.forward(x);
    Ok(match model.task {
        MlpTask::Regression => out,
        MlpTask::BinaryClassification => out.mapv(|z| sigmoid(z).clamp(1e-15, 1.0 - 1e-15)),
    })
}

struct Adam {
    m: MlpGradients,
    v: MlpGradients,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &MlpModel) -> Self {
        let zeros = || MlpGradients {
            w1: Array2::zeros(model.w1.raw_dim()),
            b1: Array1::zeros(model.b1.raw_dim()),
            w2: Array2::zeros(model.w2.raw_dim()),
            b2: Array1::zeros(model.b2.raw_dim()),
        };
        Adam {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    fn update(&mut self, model: &mut MlpModel, g: &MlpGradients, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        let lr_t = lr * c2.sqrt() / c1;
        macro_rules! apply {
            ($field:ident) => {
                Zip::from(&mut model.$field)
                    .and(&mut self.m.$field)
                    .and(&mut self.v.$field)
                    .and(&g.$field)
                    .for_each(|p, m, v, &gr| {
                        *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * gr;
                        *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * gr * gr;
                        *p -= lr_t * *m / (v.sqrt() + Self::EPS);
                    })
            };
        }
        apply!(w1);
        apply!(b1);
        apply!(w2);
        apply!(b2);
    }
}

/// Mini-batch Adam training from a seeded initialization.
///
/// Row order is reshuffled every epoch from the same seeded generator, so
/// the whole parameter trajectory is a function of the inputs and config.
pub fn fit_mlp(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, config: &MlpConfig) -> Result<MlpModel> {
    let n = x.nrows();
    if y.nrows() != n {
        return Err(ProbeError::Dimension(format!("X has {n} rows, Y has {}", y.nrows())));
    }
    if n == 0 || y.ncols() == 0 {
        return Err(ProbeError::Dimension("empty training set".into()));
    }
    if config.hidden_units == 0 || config.batch_size == 0 || config.epochs == 0 {
        return Err(ProbeError::Config(
            "hidden_units, batch_size and epochs must be positive".into(),
        ));
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(ProbeError::Config(format!(
            "learning_rate must be positive, got {}",
            config.learning_rate
        )));
    }
    ensure_finite(x.iter(), "features")?;
    ensure_finite(y.iter(), "targets")?;
    if config.task == MlpTask::BinaryClassification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(ProbeError::Config("classification targets must be 0 or 1".into()));
    }

    let mut model = MlpModel::init(x.ncols(), y.ncols(), config.hidden_units, config.task, config.seed);
    // separate stream for batch order so init does not depend on n
    let mut rng = seeded_rng(crate::rng::derive_seed(config.seed, 1));
    let mut adam = Adam::new(&model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb = y.select(Axis(0), batch);
            let (loss, grads) = backprop(&model, xb.view(), yb.view());
            if !loss.is_finite() {
                return Err(ProbeError::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            adam.update(&mut model, &grads, config.learning_rate);
        }
        epoch_loss /= n as f64;
        model.loss_history.push(epoch_loss);
        model.epochs_run = epoch + 1;

        if epoch_loss < best - config.tol * best.abs() {
            best = epoch_loss;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }

    let final_loss = mlp_loss(&model, x, y)?;
    if !final_loss.is_finite() {
        return Err(ProbeError::Diverged {
            epoch: model.epochs_run,
        });
    }
    model.final_loss = final_loss;
    ensure_finite(model.w1.iter().chain(&model.w2).chain(&model.b1).chain(&model.b2), "MLP parameters")?;
    Ok(model)
}
