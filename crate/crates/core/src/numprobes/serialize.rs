//! JSON model dumps: shape metadata plus base64 little-endian `f32` blobs.
//!
//! Parameters are narrowed to `f32`, so a reloaded model predicts to `f32`
//! precision; the dumps exist to make reports reproducible, not to resume
//! training.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{LinearModel, MlpModel, MlpTask, Penalty, ProbeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlob {
    pub shape: Vec<usize>,
    /// Base64 of the row-major little-endian `f32` values.
    pub data: String,
}

impl ParamBlob {
    fn encode<'a>(shape: &[usize], values: impl Iterator<Item = &'a f64>) -> Self {
        let bytes: Vec<u8> = values.flat_map(|&v| (v as f32).to_le_bytes()).collect();
        ParamBlob {
            shape: shape.to_vec(),
            data: STANDARD.encode(bytes),
        }
    }

    fn decode(&self, name: &str) -> Result<Vec<f64>> {
        let bytes = STANDARD
            .decode(&self.data)
            .map_err(|e| ProbeError::Serialization(format!("{name}: {e}")))?;
        let expected: usize = self.shape.iter().product();
        if bytes.len() != expected * 4 {
            return Err(ProbeError::Serialization(format!(
                "{name}: {} bytes for shape {:?}",
                bytes.len(),
                self.shape
            )));
        }
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }

    fn matrix(&self, name: &str) -> Result<Array2<f64>> {
        let [r, c] = self.shape[..] else {
            return Err(ProbeError::Serialization(format!("{name}: expected a 2-d shape")));
        };
        Array2::from_shape_vec((r, c), self.decode(name)?).map_err(|e| ProbeError::Serialization(e.to_string()))
    }

    fn vector(&self, name: &str) -> Result<Array1<f64>> {
        if self.shape.len() != 1 {
            return Err(ProbeError::Serialization(format!("{name}: expected a 1-d shape")));
        }
        Ok(Array1::from(self.decode(name)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub kind: String,
    pub meta: BTreeMap<String, Value>,
    pub params: BTreeMap<String, ParamBlob>,
}

impl ModelJson {
    fn param(&self, name: &str) -> Result<&ParamBlob> {
        self.params
            .get(name)
            .ok_or_else(|| ProbeError::Serialization(format!("missing parameter {name}")))
    }

    fn meta_as<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let v = self
            .meta
            .get(key)
            .ok_or_else(|| ProbeError::Serialization(format!("missing meta field {key}")))?;
        serde_json::from_value(v.clone()).map_err(|e| ProbeError::Serialization(format!("{key}: {e}")))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(ProbeError::Serialization(format!(
                "expected a {kind} model, found {}",
                self.kind
            )));
        }
        Ok(())
    }
}

fn json<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

impl LinearModel {
    pub fn to_model_json(&self) -> ModelJson {
        let mut params = BTreeMap::new();
        params.insert("weights".into(), ParamBlob::encode(self.weights.shape(), self.weights.iter()));
        params.insert("intercept".into(), ParamBlob::encode(self.intercept.shape(), self.intercept.iter()));
        let meta = BTreeMap::from([
            ("penalty".to_string(), json(self.penalty)),
            ("alpha".to_string(), json(self.alpha)),
            ("converged".to_string(), json(self.converged)),
            ("sweeps".to_string(), json(self.sweeps)),
        ]);
        ModelJson {
            kind: "linear".into(),
            meta,
            params,
        }
    }

    pub fn from_model_json(doc: &ModelJson) -> Result<Self> {
        doc.expect_kind("linear")?;
        let weights = doc.param("weights")?.matrix("weights")?;
        let intercept = doc.param("intercept")?.vector("intercept")?;
        if intercept.len() != weights.ncols() {
            return Err(ProbeError::Serialization("intercept length differs from target count".into()));
        }
        Ok(LinearModel {
            weights,
            intercept,
            penalty: doc.meta_as::<Penalty>("penalty")?,
            alpha: doc.meta_as("alpha")?,
            converged: doc.meta_as("converged")?,
            sweeps: doc.meta_as("sweeps")?,
            objective_trace: Vec::new(),
        })
    }
}

impl MlpModel {
    pub fn to_model_json(&self) -> ModelJson {
        let mut params = BTreeMap::new();
        params.insert("w1".into(), ParamBlob::encode(self.w1.shape(), self.w1.iter()));
        params.insert("b1".into(), ParamBlob::encode(self.b1.shape(), self.b1.iter()));
        params.insert("w2".into(), ParamBlob::encode(self.w2.shape(), self.w2.iter()));
        params.insert("b2".into(), ParamBlob::encode(self.b2.shape(), self.b2.iter()));
        let meta = BTreeMap::from([
            ("task".to_string(), json(self.task)),
            ("seed".to_string(), json(self.seed)),
            ("final_loss".to_string(), json(self.final_loss)),
            ("epochs_run".to_string(), json(self.epochs_run)),
        ]);
        ModelJson {
            kind: "mlp".into(),
            meta,
            params,
        }
    }

    pub fn from_model_json(doc: &ModelJson) -> Result<Self> {
        doc.expect_kind("mlp")?;
        let w1 = doc.param("w1")?.matrix("w1")?;
        let b1 = doc.param("b1")?.vector("b1")?;
        let w2 = doc.param("w2")?.matrix("w2")?;
        let b2 = doc.param("b2")?.vector("b2")?;
        if b1.len() != w1.ncols() || w2.nrows() != w1.ncols() || b2.len() != w2.ncols() {
            return Err(ProbeError::Serialization("inconsistent MLP shapes".into()));
        }
        Ok(MlpModel {
            w1,
            b1,
            w2,
            b2,
            task: doc.meta_as::<MlpTask>("task")?,
            seed: doc.meta_as("seed")?,
            final_loss: doc.meta_as::<Option<f64>>("final_loss")?.unwrap_or(f64::NAN),
            epochs_run: doc.meta_as("epochs_run")?,
            loss_history: Vec::new(),
        })
    }
}
