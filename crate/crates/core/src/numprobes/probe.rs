use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{
    fit_linear, fit_mlp, predict_linear, predict_mlp, standardize, LinearConfig, LinearModel, MlpConfig, MlpModel,
    MlpTask, ModelJson, Result, StandardizationParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProbeConfig {
    Linear(LinearConfig),
    Mlp(MlpConfig),
}

impl ProbeConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ProbeConfig::Linear(_) => "linear",
            ProbeConfig::Mlp(_) => "mlp",
        }
    }
}

#[derive(Debug, Clone)]
pub enum FittedModel {
    Linear(LinearModel),
    Mlp(MlpModel),
}

/// A model together with the feature (and optionally target) scaling it was
/// trained under. [`FittedProbe::predict`] takes raw features and returns
/// outputs in the original target units.
#[derive(Debug, Clone)]
pub struct FittedProbe {
    pub features: StandardizationParams,
    pub targets: Option<StandardizationParams>,
    pub model: FittedModel,
}

/// Standardizes features (and targets if asked), then fits.
///
/// Target scaling is ignored for classification.
pub fn fit_probe(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    config: &ProbeConfig,
    standardize_targets: bool,
) -> Result<FittedProbe> {
    let (xs, features) = standardize(x)?;
    let classify = matches!(config, ProbeConfig::Mlp(c) if c.task == MlpTask::BinaryClassification);
    let (ys, targets) = if standardize_targets && !classify {
        let (ys, p) = standardize(y)?;
        (ys, Some(p))
    } else {
        (y.to_owned(), None)
    };
    let model = match config {
        ProbeConfig::Linear(c) => FittedModel::Linear(fit_linear(xs.view(), ys.view(), c)?),
        ProbeConfig::Mlp(c) => FittedModel::Mlp(fit_mlp(xs.view(), ys.view(), c)?),
    };
    Ok(FittedProbe {
        features,
        targets,
        model,
    })
}

impl FittedProbe {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let xs = self.features.apply(x)?;
        let out = match &self.model {
            FittedModel::Linear(m) => predict_linear(m, xs.view())?,
            FittedModel::Mlp(m) => predict_mlp(m, xs.view())?,
        };
        match &self.targets {
            Some(t) => t.invert(out.view()),
            None => Ok(out),
        }
    }

    pub fn model_json(&self) -> ModelJson {
        match &self.model {
            FittedModel::Linear(m) => m.to_model_json(),
            FittedModel::Mlp(m) => m.to_model_json(),
        }
    }
}
