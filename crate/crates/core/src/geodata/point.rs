use serde::{Deserialize, Serialize};

use super::{GeoError, Result};

/// A latitude/longitude pair in degrees.
///
/// Latitude lies in `[-90, 90]` and longitude in `[-180, 180)`. An input
/// longitude of exactly 180 is the same meridian as -180 and is stored as such.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::Validation(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Validation(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Validation(format!(
                "longitude {lon} outside [-180, 180]"
            )));
        }
        let lon = if lon == 180.0 { -180.0 } else { lon };
        Ok(GeoPoint { lat, lon })
    }

    /// Maps an unconstrained regressor output onto the sphere: latitude is
    /// clamped to `[-90, 90]`, longitude wrapped modulo 360 into `[-180, 180)`.
    pub fn from_prediction(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::Validation(format!(
                "non-finite prediction ({lat}, {lon})"
            )));
        }
        let lat = lat.clamp(-90.0, 90.0);
        let mut lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if lon >= 180.0 {
            lon = -180.0;
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}
