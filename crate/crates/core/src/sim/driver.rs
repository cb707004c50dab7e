use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TruckParams;
use crate::advisor::{Gating, LeadVehicleObservation, SpeedBand};
use crate::spat::PhaseColor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriverKind {
    Baseline,
    Eco,
}

impl DriverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DriverKind::Baseline => "baseline",
            DriverKind::Eco => "eco",
        }
    }
}

impl fmt::Display for DriverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(DriverKind::Baseline),
            "eco" => Ok(DriverKind::Eco),
            other => Err(format!("unknown driver {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriverParams {
    pub reaction_time_s: f64,
    /// A signal head is visible only this close to the stop line.
    pub amber_sight_distance_m: f64,
    pub comfortable_decel_mps2: f64,
    /// Acceleration the eco driver allows itself while tracking a band.
    pub comfortable_accel_mps2: f64,
    /// Proportional gain toward the band, in 1/s.
    pub band_tracking_gain: f64,
    /// Eco tracks toward the band shrunk by this much on each side, when the
    /// band is wider than twice the margin.
    pub band_margin_mps: f64,
    /// Free-flow speed. Defaults to the posted limit.
    pub cruise_speed_mps: Option<f64>,
    /// Distance short of the stop line the baseline driver aims to stop.
    pub stop_buffer_m: f64,
    pub time_headway_s: f64,
    pub min_gap_m: f64,
}

impl Default for DriverParams {
    fn default() -> Self {
        DriverParams {
            reaction_time_s: 1.0,
            amber_sight_distance_m: 150.0,
            comfortable_decel_mps2: 1.5,
            comfortable_accel_mps2: 1.0,
            band_tracking_gain: 0.5,
            band_margin_mps: 0.5,
            cruise_speed_mps: None,
            stop_buffer_m: 1.0,
            time_headway_s: 1.5,
            min_gap_m: 4.0,
        }
    }
}

impl DriverParams {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("reaction_time_s", self.reaction_time_s),
            ("amber_sight_distance_m", self.amber_sight_distance_m),
            ("comfortable_decel_mps2", self.comfortable_decel_mps2),
            ("comfortable_accel_mps2", self.comfortable_accel_mps2),
            ("band_tracking_gain", self.band_tracking_gain),
            ("time_headway_s", self.time_headway_s),
            ("min_gap_m", self.min_gap_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("driver.{name} must be positive, got {v}"));
            }
        }
        for (name, v) in [("band_margin_mps", self.band_margin_mps), ("stop_buffer_m", self.stop_buffer_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("driver.{name} must be non-negative, got {v}"));
            }
        }
        if let Some(v) = self.cruise_speed_mps {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("driver.cruise_speed_mps must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// What the driver sees through the windshield.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverView {
    pub t_s: f64,
    pub speed_mps: f64,
    pub speed_limit_mps: f64,
    /// True state of the next signal head and the distance to its stop line,
    /// before sight-distance filtering.
    pub signal: Option<(PhaseColor, f64)>,
    pub lead: Option<LeadVehicleObservation>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverCommand {
    pub accel_mps2: f64,
    /// Braking for a red beyond the normal deceleration limit.
    pub emergency: bool,
}

/// Intelligent-driver-model acceleration toward `desired_mps`, including the
/// interaction term when a lead is present.
pub fn idm_accel(
    speed_mps: f64,
    desired_mps: f64,
    lead: Option<&LeadVehicleObservation>,
    truck: &TruckParams,
    params: &DriverParams,
) -> f64 {
    let a = truck.max_accel_mps2;
    let b = params.comfortable_decel_mps2;
    let free = 1.0 - (speed_mps / desired_mps.max(0.1)).powi(4);
    let interaction = lead.map_or(0.0, |l| {
        let s_star = params.min_gap_m
            + (speed_mps * params.time_headway_s
                + speed_mps * l.relative_speed_mps / (2.0 * (a * b).sqrt()))
            .max(0.0);
        (s_star / l.gap_m.max(0.1)).powi(2)
    });
    a * (free - interaction)
}

fn tracking_bounds(band: &SpeedBand, params: &DriverParams) -> (f64, f64) {
    let (lo, hi) = (band.v_lower_mps, band.v_upper_mps);
    if hi - lo > 2.0 * params.band_margin_mps {
        (lo + params.band_margin_mps, hi - params.band_margin_mps)
    } else {
        (lo, hi)
    }
}

/// Band tracking law: proportional correction toward the nearest point of
/// the band, nothing while inside it, bounded by comfortable limits.
pub fn eco_driver(speed_mps: f64, band: &SpeedBand, params: &DriverParams) -> f64 {
    let (lo, hi) = tracking_bounds(band, params);
    let target = speed_mps.clamp(lo, hi);
    (params.band_tracking_gain * (target - speed_mps))
        .clamp(-params.comfortable_decel_mps2, params.comfortable_accel_mps2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Approach {
    Clear,
    /// A stop-worthy light came into view at this time.
    Noticed(f64),
    Braking,
    /// Decided to run the amber.
    Proceeding,
}

/// A human driver without advisory: cruises, follows, and stops for amber or
/// red lights once they are within sight, after a reaction delay.
#[derive(Debug, Clone)]
pub struct BaselineDriver {
    params: DriverParams,
    truck: TruckParams,
    approach: Approach,
    last_d_sig: Option<f64>,
}

impl BaselineDriver {
    pub fn new(params: DriverParams, truck: TruckParams) -> Self {
        BaselineDriver {
            params,
            truck,
            approach: Approach::Clear,
            last_d_sig: None,
        }
    }

    pub fn params(&self) -> &DriverParams {
        &self.params
    }

    fn desired_speed(&self, view: &DriverView) -> f64 {
        self.params
            .cruise_speed_mps
            .map_or(view.speed_limit_mps, |c| c.min(view.speed_limit_mps))
    }

    pub fn command(&mut self, view: &DriverView) -> DriverCommand {
        let follow = idm_accel(
            view.speed_mps,
            self.desired_speed(view),
            view.lead.as_ref(),
            &self.truck,
            &self.params,
        );

        // a jump in distance means the previous stop line is behind us
        if let (Some(prev), Some((_, d))) = (self.last_d_sig, view.signal) {
            if d > prev + 1.0 {
                self.approach = Approach::Clear;
            }
        }
        self.last_d_sig = view.signal.map(|(_, d)| d);

        let visible = view
            .signal
            .filter(|&(_, d)| d <= self.params.amber_sight_distance_m);
        let Some((phase, d)) = visible.filter(|(p, _)| *p != PhaseColor::Green) else {
            self.approach = Approach::Clear;
            return DriverCommand {
                accel_mps2: follow,
                emergency: false,
            };
        };

        if self.approach == Approach::Clear {
            self.approach = Approach::Noticed(view.t_s);
        }
        if let Approach::Noticed(since) = self.approach {
            if view.t_s - since < self.params.reaction_time_s - 1e-9 {
                return DriverCommand {
                    accel_mps2: follow,
                    emergency: false,
                };
            }
        }

        let room = (d - self.params.stop_buffer_m).max(0.01);
        let needed = view.speed_mps * view.speed_mps / (2.0 * room);
        if let Approach::Noticed(_) = self.approach {
            self.approach = if phase == PhaseColor::Amber && needed > self.truck.max_decel_mps2 {
                Approach::Proceeding
            } else {
                Approach::Braking
            };
        }
        match self.approach {
            Approach::Proceeding => DriverCommand {
                accel_mps2: follow,
                emergency: false,
            },
            _ => DriverCommand {
                accel_mps2: follow.min(-needed),
                emergency: phase == PhaseColor::Red && needed > self.truck.max_decel_mps2,
            },
        }
    }
}

/// Follows the advisory band; hands control to the baseline behavior when
/// no band is shown. Outside the band it applies [`eco_driver`]; inside it
/// holds speed, except that a truck below cruise speed recovers toward it
/// without leaving the band.
#[derive(Debug, Clone)]
pub struct EcoDriver {
    fallback: BaselineDriver,
}

impl EcoDriver {
    pub fn new(params: DriverParams, truck: TruckParams) -> Self {
        EcoDriver {
            fallback: BaselineDriver::new(params, truck),
        }
    }

    pub fn command(&mut self, view: &DriverView, band: &SpeedBand) -> DriverCommand {
        // the fallback keeps its reaction state current even while unused
        let fallback = self.fallback.command(view);
        match band.gating {
            Gating::Active | Gating::CappedByLead => {
                let p = self.fallback.params;
                let v = view.speed_mps;
                let (lo, hi) = tracking_bounds(band, &p);
                let track = if (lo..=hi).contains(&v) {
                    // inside the band a driver below cruise speed still
                    // picks up speed, without steering out of the band
                    let cruise = idm_accel(v, self.fallback.desired_speed(view), None, &self.fallback.truck, &p);
                    let room = p.band_tracking_gain * (hi - v);
                    cruise.clamp(0.0, room.min(p.comfortable_accel_mps2))
                } else {
                    eco_driver(v, band, &p)
                };
                let follow = view.lead.as_ref().map_or(f64::INFINITY, |l| {
                    idm_accel(v, f64::INFINITY, Some(l), &self.fallback.truck, &p)
                });
                DriverCommand {
                    accel_mps2: track.min(follow),
                    emergency: false,
                }
            }
            Gating::SuppressedTtc | Gating::NoSignal => fallback,
        }
    }
}

/// Either driver behind one interface.
#[derive(Debug, Clone)]
pub enum Driver {
    Baseline(BaselineDriver),
    Eco(EcoDriver),
}

impl Driver {
    pub fn new(kind: DriverKind, params: DriverParams, truck: TruckParams) -> Self {
        match kind {
            DriverKind::Baseline => Driver::Baseline(BaselineDriver::new(params, truck)),
            DriverKind::Eco => Driver::Eco(EcoDriver::new(params, truck)),
        }
    }

    pub fn command(&mut self, view: &DriverView, band: &SpeedBand) -> DriverCommand {
        match self {
            Driver::Baseline(d) => d.command(view),
            Driver::Eco(d) => d.command(view, band),
        }
    }
}
