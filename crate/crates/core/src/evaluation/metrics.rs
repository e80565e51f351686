use ndarray::ArrayView2;

use super::{EvalError, Result};
use crate::geodata::GeoPoint;

/// Mean Earth radius used for every distance.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(p: GeoPoint, q: GeoPoint) -> f64 {
    let (lat1, lat2) = (p.lat().to_radians(), q.lat().to_radians());
    let dlat = lat2 - lat1;
    let dlon = (q.lon() - p.lon()).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    let a = a.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_KM * a.sqrt().atan2((1.0 - a).sqrt())
}

/// Converts an `N × 2` (lat, lon) prediction matrix into valid points,
/// clamping latitude and wrapping longitude.
pub fn points_from_predictions(pred: ArrayView2<'_, f64>) -> Result<Vec<GeoPoint>> {
    if pred.ncols() != 2 {
        return Err(EvalError::Invalid(format!(
            "GPS predictions need 2 columns, got {}",
            pred.ncols()
        )));
    }
    pred.rows()
        .into_iter()
        .map(|r| GeoPoint::from_prediction(r[0], r[1]).map_err(|e| EvalError::Invalid(e.to_string())))
        .collect()
}

/// Average great-circle error in kilometers.
pub fn mean_gps_error(pred: &[GeoPoint], truth: &[GeoPoint]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let total: f64 = pred.iter().zip(truth).map(|(&p, &q)| haversine_km(p, q)).sum();
    Ok(total / pred.len() as f64)
}

pub fn mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(total / pred.len() as f64)
}

/// Fraction of exact label matches.
pub fn accuracy(pred: &[bool], truth: &[bool]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}
