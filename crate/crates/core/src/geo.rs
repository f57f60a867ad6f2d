//! Great-circle geometry and the distance-to-latency conversion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for the spherical haversine model.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Signal propagation speed in fiber, roughly two thirds of c.
pub const DEFAULT_PROPAGATION_SPEED_KM_S: f64 = 200_000.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid coordinate ({lat}, {lon}): latitude must lie in [-90, 90] and longitude in (-180, 180]")]
pub struct InvalidCoordinate {
    pub lat: f64,
    pub lon: f64,
}

/// A point on the sphere, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoCoord {
    lat: f64,
    lon: f64,
}

impl GeoCoord {
    /// Longitude -180 is folded onto 180 so every meridian has one representation.
    pub fn new(lat: f64, lon: f64) -> Result<Self, InvalidCoordinate> {
        let lon = if lon == -180.0 { 180.0 } else { lon };
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) || lon <= -180.0 || lon > 180.0 {
            return Err(InvalidCoordinate { lat, lon });
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Moves the point by the given offsets, clamping latitude and wrapping longitude.
    pub fn offset(&self, dlat: f64, dlon: f64) -> Self {
        let lat = (self.lat + dlat).clamp(-89.0, 89.0);
        let mut lon = self.lon + dlon;
        while lon > 180.0 {
            lon -= 360.0;
        }
        while lon <= -180.0 {
            lon += 360.0;
        }
        Self { lat, lon }
    }
}

/// Haversine distance in kilometres.
pub fn great_circle_km(a: GeoCoord, b: GeoCoord) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Propagation latency in milliseconds along the great circle at the default fiber speed.
pub fn great_circle_latency(a: GeoCoord, b: GeoCoord) -> f64 {
    great_circle_latency_at(a, b, DEFAULT_PROPAGATION_SPEED_KM_S)
}

pub fn great_circle_latency_at(a: GeoCoord, b: GeoCoord, speed_km_s: f64) -> f64 {
    great_circle_km(a, b) / speed_km_s * 1000.0
}
