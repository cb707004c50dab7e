//! Geodetic primitives, the lane map, and map matching.
//!
//! Distances are great-circle distances on a sphere of mean Earth radius.
//! Headings are degrees clockwise from true north; direction vectors live in
//! a local east-north frame.

mod map;
mod matching;
mod projection;

pub use map::{LaneNode, LaneSegment, MapGraph, MapLoadError, SignalNode, SignalRef};
pub use matching::{match_to_map, MatchResult, MAX_MATCH_RADIUS_M};
pub(crate) use matching::match_lane;
pub use projection::{project_onto_segment, Projection, SegmentSide};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no heading-consistent lane within {radius_m} m of ({lat:.7}, {lon:.7})")]
    NoMatch { lat: f64, lon: f64, radius_m: f64 },
    #[error("no signal downstream of segment {segment}")]
    NoSignal { segment: String },
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !self.lat.is_finite() || !self.lon.is_finite() {
            return Err(GeoError::InvalidInput(format!(
                "non-finite coordinate ({}, {})",
                self.lat, self.lon
            )));
        }
        if !(-90.0..=90.0).contains(&self.lat) || !(-180.0..=180.0).contains(&self.lon) {
            return Err(GeoError::InvalidInput(format!(
                "coordinate out of range ({}, {})",
                self.lat, self.lon
            )));
        }
        Ok(())
    }

    /// Moves the point by a small local east/north displacement in meters.
    ///
    /// Equirectangular inverse; accurate to well under a millimeter for
    /// displacements of a few hundred meters away from the poles.
    pub fn offset(&self, east_m: f64, north_m: f64) -> GeoPoint {
        let dlat = north_m / EARTH_RADIUS_M;
        let mid_lat = self.lat.to_radians() + 0.5 * dlat;
        let dlon = east_m / (EARTH_RADIUS_M * mid_lat.cos());
        GeoPoint::new(self.lat + dlat.to_degrees(), self.lon + dlon.to_degrees())
    }

    /// Local east/north vector in meters from `self` to `other`.
    pub fn enu_to(&self, other: &GeoPoint) -> [f64; 2] {
        let mid_lat = 0.5 * (self.lat + other.lat).to_radians();
        let dlon = wrap_radians((other.lon - self.lon).to_radians());
        let east = EARTH_RADIUS_M * mid_lat.cos() * dlon;
        let north = EARTH_RADIUS_M * (other.lat - self.lat).to_radians();
        [east, north]
    }

    /// Linear interpolation in latitude/longitude; `f` in [0, 1].
    pub fn lerp(&self, other: &GeoPoint, f: f64) -> GeoPoint {
        GeoPoint::new(
            self.lat + (other.lat - self.lat) * f,
            self.lon + (other.lon - self.lon) * f,
        )
    }
}

fn wrap_radians(x: f64) -> f64 {
    use std::f64::consts::PI;
    if x > PI {
        x - 2.0 * PI
    } else if x < -PI {
        x + 2.0 * PI
    } else {
        x
    }
}

/// Great-circle distance in meters using the haversine formula.
pub fn haversine_distance(a: GeoPoint, b: GeoPoint) -> Result<f64, GeoError> {
    a.validate()?;
    b.validate()?;
    Ok(haversine_unchecked(a, b))
}

pub(crate) fn haversine_unchecked(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = 0.5 * (phi2 - phi1);
    let half_dlambda = 0.5 * wrap_radians((b.lon - a.lon).to_radians());
    let s = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    // rounding can push s a hair above 1 for antipodal points
    2.0 * EARTH_RADIUS_M * s.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `a` to `b` in degrees [0, 360).
pub fn bearing_deg(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    normalize_heading(y.atan2(x).to_degrees())
}

pub fn normalize_heading(deg: f64) -> f64 {
    let h = deg.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Smallest absolute difference between two headings, in degrees [0, 180].
pub fn heading_difference(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Unit vector (east, north) of a heading measured clockwise from north.
/// Exact at multiples of 90 degrees.
pub fn heading_unit(heading_deg: f64) -> [f64; 2] {
    let d = heading_deg.rem_euclid(360.0);
    let quadrant = (d / 90.0).round();
    let (s, c) = (d - 90.0 * quadrant).to_radians().sin_cos();
    match quadrant as i64 % 4 {
        0 => [s, c],
        1 => [c, -s],
        2 => [-s, -c],
        _ => [-c, s],
    }
}

/// True when the truck heading points toward `direction` (strictly positive
/// inner product). A perpendicular heading is not consistent.
pub fn heading_consistent(truck_heading_deg: f64, direction: [f64; 2]) -> Result<bool, GeoError> {
    if !truck_heading_deg.is_finite() || !direction[0].is_finite() || !direction[1].is_finite() {
        return Err(GeoError::InvalidInput("non-finite heading or direction".into()));
    }
    let norm = direction[0].hypot(direction[1]);
    if norm == 0.0 {
        return Err(GeoError::InvalidInput("zero-length direction vector".into()));
    }
    let h = heading_unit(truck_heading_deg);
    Ok((h[0] * direction[0] + h[1] * direction[1]) / norm > 0.0)
}
