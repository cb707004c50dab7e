use serde::{Deserialize, Serialize};

use crate::geo::GeoPoint;

/// Longitudinal limits of a loaded heavy-duty truck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruckParams {
    pub max_accel_mps2: f64,
    pub max_decel_mps2: f64,
    /// Deceleration available when the driver brakes hard for a red.
    pub emergency_decel_mps2: f64,
    /// 115 km/h.
    pub max_speed_mps: f64,
    pub length_m: f64,
}

impl Default for TruckParams {
    fn default() -> Self {
        TruckParams {
            max_accel_mps2: 1.0,
            max_decel_mps2: 2.5,
            emergency_decel_mps2: 4.0,
            max_speed_mps: 31.9,
            length_m: 20.0,
        }
    }
}

impl TruckParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("max_accel_mps2", self.max_accel_mps2),
            ("max_decel_mps2", self.max_decel_mps2),
            ("emergency_decel_mps2", self.emergency_decel_mps2),
            ("max_speed_mps", self.max_speed_mps),
            ("length_m", self.length_m),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("truck.{name} must be positive, got {v}"));
            }
        }
        if self.emergency_decel_mps2 < self.max_decel_mps2 {
            return Err("truck.emergency_decel_mps2 must be at least max_decel_mps2".into());
        }
        Ok(())
    }

    /// The same truck with the emergency deceleration unlocked.
    pub fn emergency(&self) -> TruckParams {
        TruckParams {
            max_decel_mps2: self.emergency_decel_mps2,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruckState {
    pub position: GeoPoint,
    pub heading_deg: f64,
    pub speed_mps: f64,
    /// Realized acceleration over the last step.
    pub accel_mps2: f64,
    pub odometer_m: f64,
    pub t_s: f64,
}

/// Result of one integration step. The caller places the truck on the map
/// from the new odometer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub displacement_m: f64,
}

/// Point-mass step: clamp the command, integrate speed, floor at rest, cap
/// at the maximum speed, and advance by the trapezoidal displacement.
pub fn integrate(speed_mps: f64, commanded_accel: f64, params: &TruckParams, dt_s: f64) -> Step {
    debug_assert!(dt_s > 0.0);
    let a = commanded_accel.clamp(-params.max_decel_mps2, params.max_accel_mps2);
    let v1 = (speed_mps + a * dt_s).clamp(0.0, params.max_speed_mps);
    Step {
        speed_mps: v1,
        accel_mps2: (v1 - speed_mps) / dt_s,
        displacement_m: 0.5 * (speed_mps + v1) * dt_s,
    }
}

/// Advances `state` by one step along a straight line at its heading. The
/// scenario runner uses [`integrate`] with a [`super::Route`] instead so the
/// truck follows the lane chain.
pub fn step_truck(state: &TruckState, commanded_accel: f64, params: &TruckParams, dt_s: f64) -> TruckState {
    let s = integrate(state.speed_mps, commanded_accel, params, dt_s);
    let [e, n] = crate::geo::heading_unit(state.heading_deg);
    TruckState {
        position: state
            .position
            .offset(e * s.displacement_m, n * s.displacement_m),
        heading_deg: state.heading_deg,
        speed_mps: s.speed_mps,
        accel_mps2: s.accel_mps2,
        odometer_m: state.odometer_m + s.displacement_m,
        t_s: state.t_s + dt_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(v: f64) -> TruckState {
        TruckState {
            position: GeoPoint::new(33.8, -118.26),
            heading_deg: 0.0,
            speed_mps: v,
            accel_mps2: 0.0,
            odometer_m: 0.0,
            t_s: 0.0,
        }
    }

    #[test]
    fn constant_speed() {
        let s = step_truck(&state(10.0), 0.0, &TruckParams::default(), 0.1);
        assert_eq!(s.speed_mps, 10.0);
        assert!((s.odometer_m - 1.0).abs() < 1e-12);
        let moved = crate::geo::haversine_distance(state(10.0).position, s.position).unwrap();
        assert!((moved - 1.0).abs() < 1e-6);
    }

    #[test]
    fn speed_floors_at_rest() {
        let s = step_truck(&state(0.05), -2.5, &TruckParams::default(), 0.1);
        assert_eq!(s.speed_mps, 0.0);
        assert!((s.odometer_m - 0.0025).abs() < 1e-12);
    }

    #[test]
    fn speed_caps_at_cruise_maximum() {
        let s = step_truck(&state(31.9), 1.0, &TruckParams::default(), 0.1);
        assert_eq!(s.speed_mps, 31.9);
        assert_eq!(s.accel_mps2, 0.0);
    }

    #[test]
    fn command_is_clamped() {
        let p = TruckParams::default();
        assert_eq!(integrate(10.0, -9.0, &p, 0.1).speed_mps, 10.0 - 0.25);
        assert!((integrate(10.0, -9.0, &p.emergency(), 0.1).speed_mps - 9.6).abs() < 1e-12);
        assert!((integrate(10.0, 3.0, &p, 0.1).speed_mps - 10.1).abs() < 1e-12);
    }
}
