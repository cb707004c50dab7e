//! Road-load fuel-rate proxy.
//!
//! Tractive power from inertia, rolling resistance, aerodynamic drag and
//! grade is converted to diesel mass flow through a fixed engine efficiency,
//! floored at idle. There is no regenerative credit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::TrajectoryLog;

pub const GRAVITY_MPS2: f64 = 9.81;

/// Below this speed the truck counts as stationary.
pub const STOP_SPEED_MPS: f64 = 0.1;
/// A stationary interval shorter than this is not a stop.
pub const MIN_STOP_S: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum EnergyError {
    #[error("trajectory log has no rows")]
    EmptyLog,
    #[error("invalid energy parameter: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub mass_kg: f64,
    pub rolling_coeff: f64,
    pub drag_area_cda_m2: f64,
    pub air_density_kgm3: f64,
    pub idle_fuel_gps: f64,
    pub engine_efficiency: f64,
    pub diesel_energy_jpg: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            mass_kg: 25_000.0,
            rolling_coeff: 0.007,
            drag_area_cda_m2: 7.5,
            air_density_kgm3: 1.207,
            idle_fuel_gps: 0.9,
            engine_efficiency: 0.38,
            diesel_energy_jpg: 42_800.0,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let fields = [
            ("mass_kg", self.mass_kg),
            ("rolling_coeff", self.rolling_coeff),
            ("drag_area_cda_m2", self.drag_area_cda_m2),
            ("air_density_kgm3", self.air_density_kgm3),
            ("idle_fuel_gps", self.idle_fuel_gps),
            ("engine_efficiency", self.engine_efficiency),
            ("diesel_energy_jpg", self.diesel_energy_jpg),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(EnergyError::InvalidParams(format!("{name} = {v}")));
            }
        }
        if self.engine_efficiency >= 1.0 {
            return Err(EnergyError::InvalidParams(format!(
                "engine_efficiency = {}",
                self.engine_efficiency
            )));
        }
        Ok(())
    }
}

/// Power at the wheels in watts; negative while braking. `grade_rad` is the
/// road inclination angle.
pub fn tractive_power(speed_mps: f64, accel_mps2: f64, grade_rad: f64, p: &EnergyParams) -> f64 {
    let v = speed_mps;
    let m = p.mass_kg;
    m * accel_mps2 * v
        + m * GRAVITY_MPS2 * p.rolling_coeff * v
        + 0.5 * p.air_density_kgm3 * p.drag_area_cda_m2 * v * v * v
        + m * GRAVITY_MPS2 * grade_rad.sin() * v
}

/// Diesel mass flow in grams per second.
pub fn fuel_rate(power_w: f64, p: &EnergyParams) -> f64 {
    let positive = power_w.max(0.0);
    p.idle_fuel_gps
        .max(positive / (p.engine_efficiency * p.diesel_energy_jpg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelSummary {
    pub total_g: f64,
    /// Fuel burned while stopped.
    pub idle_g: f64,
    pub moving_g: f64,
    pub stops_count: u32,
    pub duration_s: f64,
}

/// Integrates fuel over a sampled trajectory.
///
/// `samples` are `(t_s, speed_mps, accel_mps2)` in increasing time order.
/// The rate is recomputed from speed and acceleration with `params`, so
/// logs can be re-evaluated under other parameters.
pub fn trip_fuel_samples(
    samples: &[(f64, f64, f64)],
    params: &EnergyParams,
) -> Result<FuelSummary, EnergyError> {
    params.validate()?;
    let Some(&(t0, _, _)) = samples.first() else {
        return Err(EnergyError::EmptyLog);
    };
    let t_end = samples[samples.len() - 1].0;
    let rates: Vec<f64> = samples
        .iter()
        .map(|&(_, v, a)| fuel_rate(tractive_power(v, a, 0.0, params), params))
        .collect();

    // mark rows inside stops: maximal stationary runs lasting MIN_STOP_S
    let mut in_stop = vec![false; samples.len()];
    let mut stops_count = 0;
    let mut i = 0;
    while i < samples.len() {
        if samples[i].1 >= STOP_SPEED_MPS {
            i += 1;
            continue;
        }
        let start = i;
        while i < samples.len() && samples[i].1 < STOP_SPEED_MPS {
            i += 1;
        }
        let end = i - 1;
        if samples[end].0 - samples[start].0 >= MIN_STOP_S - 1e-9 {
            stops_count += 1;
            in_stop[start..=end].iter_mut().for_each(|s| *s = true);
        }
    }

    let mut idle_g = 0.0;
    let mut moving_g = 0.0;
    for k in 1..samples.len() {
        let dt = samples[k].0 - samples[k - 1].0;
        let g = 0.5 * (rates[k] + rates[k - 1]) * dt;
        if in_stop[k] && in_stop[k - 1] {
            idle_g += g;
        } else {
            moving_g += g;
        }
    }
    Ok(FuelSummary {
        total_g: idle_g + moving_g,
        idle_g,
        moving_g,
        stops_count,
        duration_s: t_end - t0,
    })
}

pub fn trip_fuel(log: &TrajectoryLog, params: &EnergyParams) -> Result<FuelSummary, EnergyError> {
    let samples: Vec<(f64, f64, f64)> = log
        .rows()
        .iter()
        .map(|r| (r.t_s, r.speed_mps, r.accel_mps2))
        .collect();
    trip_fuel_samples(&samples, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn power_at_rest_is_zero() {
        assert_eq!(tractive_power(0.0, 1.0, 0.05, &EnergyParams::default()), 0.0);
    }

    #[test]
    fn cruise_power_by_hand() {
        // 25000 * 9.81 * 0.007 * 10 + 0.5 * 1.207 * 7.5 * 1000
        let expected = 17_167.5 + 4_526.25;
        let p = tractive_power(10.0, 0.0, 0.0, &EnergyParams::default());
        assert!((p - expected).abs() < 1e-9, "{p}");
    }

    #[test]
    fn braking_power_is_negative() {
        assert!(tractive_power(10.0, -2.0, 0.0, &EnergyParams::default()) < 0.0);
    }

    #[test]
    fn fuel_rate_cases() {
        let p = EnergyParams::default();
        assert_eq!(fuel_rate(-5_000.0, &p), 0.9);
        assert_eq!(fuel_rate(0.0, &p), 0.9);
        assert!((fuel_rate(162_640.0, &p) - 10.0).abs() < 1e-12);
        let break_even = 0.9 * 0.38 * 42_800.0;
        assert!((fuel_rate(break_even, &p) - 0.9).abs() < 1e-12);
        assert!((fuel_rate(break_even * (1.0 + 1e-9), &p) - 0.9).abs() < 1e-8);
    }

    #[test]
    fn stationary_ten_seconds() {
        let samples: Vec<_> = (0..=100).map(|k| (k as f64 * 0.1, 0.0, 0.0)).collect();
        let s = trip_fuel_samples(&samples, &EnergyParams::default()).unwrap();
        assert!(rel(s.total_g, 9.0) < 1e-12);
        assert_eq!(s.stops_count, 1);
        assert!(rel(s.idle_g, 9.0) < 1e-12);
        assert_eq!(s.moving_g, 0.0);
    }

    #[test]
    fn short_pause_is_not_a_stop() {
        let samples: Vec<_> = (0..=50)
            .map(|k| {
                let v = if (20..25).contains(&k) { 0.0 } else { 5.0 };
                (k as f64 * 0.1, v, 0.0)
            })
            .collect();
        let s = trip_fuel_samples(&samples, &EnergyParams::default()).unwrap();
        assert_eq!(s.stops_count, 0);
        assert_eq!(s.idle_g, 0.0);
    }

    #[test]
    fn empty_log_is_an_error() {
        assert_eq!(
            trip_fuel_samples(&[], &EnergyParams::default()),
            Err(EnergyError::EmptyLog)
        );
    }

    #[test]
    fn rejects_bad_efficiency() {
        let p = EnergyParams {
            engine_efficiency: 1.2,
            ..EnergyParams::default()
        };
        assert!(p.validate().is_err());
    }
}
