//! Trainable probes: penalized linear regression fit by coordinate descent
//! and a one-hidden-layer MLP for regression or binary classification.
//!
//! Every fit is a pure function of `(data, config, seed)`.

mod linear;
mod mlp;
mod probe;
mod serialize;
mod standardize;

use thiserror::Error;

pub use linear::{fit_linear, predict_linear, LinearConfig, LinearModel, Penalty};
pub use mlp::{
    fit_mlp, mlp_gradient, mlp_loss, predict_mlp, MlpConfig, MlpGradients, MlpModel, MlpTask,
    DEFAULT_HIDDEN_UNITS,
};
pub use probe::{fit_probe, FittedModel, FittedProbe, ProbeConfig};
pub use serialize::{ModelJson, ParamBlob};
pub use standardize::{standardize, StandardizationParams};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("model serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = ProbeError> = std::result::Result<T, E>;

pub(crate) fn ensure_finite<'a, I>(values: I, what: &'static str) -> Result<()>
where
    I: IntoIterator<Item = &'a f64>,
{
    if values.into_iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ProbeError::NonFinite(what))
    }
}
