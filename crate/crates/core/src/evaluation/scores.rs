use super::{EvalError, Result};

/// Probe error reduction: `1 - task_error / control_error`.
///
/// 1 means no error, 0 means no better than the control, negative means
/// worse than the control.
pub fn per(task_error: f64, control_error: f64) -> Result<f64> {
    if control_error.is_nan() || control_error <= 0.0 || !control_error.is_finite() {
        return Err(EvalError::Invalid(format!(
            "control error must be positive, got {control_error}"
        )));
    }
    if task_error.is_nan() || task_error < 0.0 || !task_error.is_finite() {
        return Err(EvalError::Invalid(format!(
            "task error must be non-negative, got {task_error}"
        )));
    }
    Ok(1.0 - task_error / control_error)
}

/// Probe accuracy minus control accuracy.
pub fn selectivity(probe_accuracy: f64, control_accuracy: f64) -> f64 {
    probe_accuracy - control_accuracy
}
