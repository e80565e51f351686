use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{ProbeError, Result};

/// Per-column centering and scaling learned from a training matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizationParams {
    pub mean: Array1<f64>,
    /// Sample standard deviation; 1 for zero-variance columns.
    pub scale: Array1<f64>,
}

impl StandardizationParams {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.dim() {
            return Err(ProbeError::Dimension(format!(
                "expected {} columns, got {}",
                self.dim(),
                x.ncols()
            )));
        }
        Ok((&x - &self.mean) / &self.scale)
    }

    pub fn invert(&self, xs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if xs.ncols() != self.dim() {
            return Err(ProbeError::Dimension(format!(
                "expected {} columns, got {}",
                self.dim(),
                xs.ncols()
            )));
        }
        Ok(&xs * &self.scale + &self.mean)
    }
}

/// Centers every column and divides by its sample standard deviation.
pub fn standardize(x: ArrayView2<'_, f64>) -> Result<(Array2<f64>, StandardizationParams)> {
    let n = x.nrows();
    if n < 2 {
        return Err(ProbeError::Dimension(format!(
            "standardization needs at least 2 rows, got {n}"
        )));
    }
    super::ensure_finite(x.iter(), "features")?;
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let scale = x
        .axis_iter(Axis(1))
        .zip(mean.iter())
        .map(|(col, &m)| {
            let ss: f64 = col.iter().map(|v| (v - m) * (v - m)).sum();
            let sd = (ss / (n - 1) as f64).sqrt();
            // a constant column can leave rounding residue in ss
            if sd > 1e-12 * m.abs().max(1.0) {
                sd
            } else {
                1.0
            }
        })
        .collect::<Array1<f64>>();
    let params = StandardizationParams { mean, scale };
    let xs = params.apply(x)?;
    Ok((xs, params))
}
