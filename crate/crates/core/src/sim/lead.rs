use serde::{Deserialize, Serialize};

use super::SimError;
use crate::advisor::LeadVehicleObservation;

/// One point of a scripted lead-vehicle trajectory. Speeds are linearly
/// interpolated between keyframes and held after the last one. A keyframe
/// with `gap_m` places the lead that far ahead of the truck's front bumper
/// at `t_s`; the first keyframe must have one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeadKeyframe {
    pub t_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_m: Option<f64>,
    pub speed_mps: f64,
}

/// A preceding vehicle driven by script rather than by a driver model. It
/// ignores signals.
#[derive(Debug, Clone)]
pub struct LeadVehicle {
    keys: Vec<LeadKeyframe>,
    next_key: usize,
    /// Rear-bumper odometer on the truck's route, once it exists.
    position_m: Option<f64>,
    speed_mps: f64,
}

impl LeadVehicle {
    pub fn new(keys: Vec<LeadKeyframe>) -> Result<Self, SimError> {
        for w in keys.windows(2) {
            if w[1].t_s <= w[0].t_s {
                return Err(SimError::Config("lead keyframes must have increasing t_s".into()));
            }
        }
        for k in &keys {
            let ok = k.t_s.is_finite()
                && k.t_s >= 0.0
                && k.speed_mps.is_finite()
                && k.speed_mps >= 0.0
                && k.gap_m.is_none_or(|g| g.is_finite() && g > 0.0);
            if !ok {
                return Err(SimError::Config(format!("invalid lead keyframe {k:?}")));
            }
        }
        if keys.first().is_some_and(|k| k.gap_m.is_none()) {
            return Err(SimError::Config("first lead keyframe needs gap_m".into()));
        }
        Ok(LeadVehicle {
            keys,
            next_key: 0,
            position_m: None,
            speed_mps: 0.0,
        })
    }

    fn speed_at(&self, t_s: f64) -> f64 {
        let k = self.keys.partition_point(|k| k.t_s <= t_s);
        match (k.checked_sub(1).map(|i| self.keys[i]), self.keys.get(k)) {
            (Some(a), Some(b)) => a.speed_mps + (b.speed_mps - a.speed_mps) * (t_s - a.t_s) / (b.t_s - a.t_s),
            (Some(a), None) => a.speed_mps,
            _ => 0.0,
        }
    }

    /// Moves the lead to time `t_s`, `dt_s` after the previous call, applying
    /// any keyframe placement that falls due. `ego_front_m` is the truck's
    /// odometer at `t_s`.
    pub fn advance(&mut self, t_s: f64, dt_s: f64, ego_front_m: f64) {
        let v1 = self.speed_at(t_s);
        if let Some(p) = self.position_m.as_mut() {
            *p += 0.5 * (self.speed_mps + v1) * dt_s;
        }
        self.speed_mps = v1;
        while let Some(k) = self.keys.get(self.next_key) {
            if k.t_s > t_s + 1e-9 {
                break;
            }
            if let Some(g) = k.gap_m {
                self.position_m = Some(ego_front_m + g);
            }
            self.next_key += 1;
        }
    }

    /// What perception reports; `None` before the lead appears.
    pub fn observe(&self, ego_front_m: f64, ego_speed_mps: f64) -> Option<LeadVehicleObservation> {
        self.position_m.map(|p| LeadVehicleObservation {
            gap_m: p - ego_front_m,
            lead_speed_mps: self.speed_mps,
            relative_speed_mps: ego_speed_mps - self.speed_mps,
        })
    }
}
