//! Recommended speed band for the approach to the next signal.
//!
//! The band comes from a single reference speed, the distance to the stop
//! line divided by the time left in the current phase:
//!
//! - red: anything up to the reference speed (capped by the limit) reaches
//!   the line no earlier than the green onset;
//! - green: anything from the reference speed up to the limit clears the
//!   line before the phase ends; if even the limit is too slow the band
//!   collapses to `[0, 0]`, i.e. slow down for the next green.
//!
//! A preceding vehicle caps the upper bound at its speed, and a short
//! time-to-collision withholds the advice altogether.

mod display;
mod looping;

pub use display::DisplayFilter;
pub use looping::{AdvisoryLoop, AdvisoryOutput, AdvisoryRecord, Localization, Mailbox, SpatStore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spat::PhaseColor;

/// Phase residuals shorter than this cannot be timed against.
pub const TIMING_EPSILON_S: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdvisorError {
    #[error("invalid advisory input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Gating {
    Active,
    CappedByLead,
    SuppressedTtc,
    NoSignal,
}

impl Gating {
    pub fn as_str(self) -> &'static str {
        match self {
            Gating::Active => "ACTIVE",
            Gating::CappedByLead => "CAPPED_BY_LEAD",
            Gating::SuppressedTtc => "SUPPRESSED_TTC",
            Gating::NoSignal => "NO_SIGNAL",
        }
    }

    /// Whether the band is shown to (and followed by) the driver.
    pub fn is_displayed(self) -> bool {
        matches!(self, Gating::Active | Gating::CappedByLead)
    }
}

impl std::fmt::Display for Gating {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Gating {
    type Err = AdvisorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ACTIVE" => Gating::Active,
            "CAPPED_BY_LEAD" => Gating::CappedByLead,
            "SUPPRESSED_TTC" => Gating::SuppressedTtc,
            "NO_SIGNAL" => Gating::NoSignal,
            other => return Err(AdvisorError::InvalidInput(format!("unknown gating {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedBand {
    pub v_lower_mps: f64,
    pub v_upper_mps: f64,
    pub gating: Gating,
}

impl SpeedBand {
    /// Unconstrained placeholder used when there is no usable signal.
    pub fn no_signal(v_lim_mps: f64) -> Self {
        SpeedBand {
            v_lower_mps: 0.0,
            v_upper_mps: v_lim_mps.max(0.0),
            gating: Gating::NoSignal,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.v_lower_mps && v <= self.v_upper_mps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadVehicleObservation {
    pub gap_m: f64,
    pub lead_speed_mps: f64,
    /// Ego speed minus lead speed; positive while closing.
    pub relative_speed_mps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryInput {
    pub d_sig_m: f64,
    pub phase: PhaseColor,
    /// Time left in the current phase, already aged by `spat_age_ms`.
    pub t_current_s: f64,
    pub v_lim_mps: f64,
    pub ego_speed_mps: f64,
    pub lead: Option<LeadVehicleObservation>,
    pub spat_age_ms: u64,
    /// Length of the red that follows an amber, from the phase plan.
    pub red_after_amber_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisorConfig {
    #[serde(default = "AdvisorConfig::default_ttc")]
    pub ttc_threshold_s: f64,
    #[serde(default = "AdvisorConfig::default_staleness")]
    pub staleness_s: f64,
    #[serde(default = "AdvisorConfig::default_rate")]
    pub rate_hz: f64,
    /// Lead vehicles farther than this are not reported by perception.
    #[serde(default = "AdvisorConfig::default_perception")]
    pub perception_range_m: f64,
}

impl AdvisorConfig {
    fn default_ttc() -> f64 {
        4.0
    }
    fn default_staleness() -> f64 {
        2.5
    }
    fn default_rate() -> f64 {
        10.0
    }
    fn default_perception() -> f64 {
        100.0
    }
}

impl Default for AdvisorConfig {
    fn default() -> Self {
        AdvisorConfig {
            ttc_threshold_s: Self::default_ttc(),
            staleness_s: Self::default_staleness(),
            rate_hz: Self::default_rate(),
            perception_range_m: Self::default_perception(),
        }
    }
}

/// Speed that reaches the stop line exactly when the current phase ends.
///
/// Returns `f64::INFINITY` when less than [`TIMING_EPSILON_S`] remains.
pub fn reference_speed(d_sig_m: f64, t_current_s: f64) -> Result<f64, AdvisorError> {
    if !(d_sig_m.is_finite() && d_sig_m >= 0.0) {
        return Err(AdvisorError::InvalidInput(format!("d_sig_m = {d_sig_m}")));
    }
    if !(t_current_s.is_finite() && t_current_s >= 0.0) {
        return Err(AdvisorError::InvalidInput(format!("t_current_s = {t_current_s}")));
    }
    if t_current_s < TIMING_EPSILON_S {
        return Ok(f64::INFINITY);
    }
    Ok(d_sig_m / t_current_s)
}

/// Gap over closing speed; `None` while the gap is opening or constant.
pub fn time_to_collision(obs: &LeadVehicleObservation) -> Option<f64> {
    (obs.relative_speed_mps > 0.0).then(|| obs.gap_m / obs.relative_speed_mps)
}

fn check(name: &str, v: f64, positive: bool) -> Result<(), AdvisorError> {
    let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(AdvisorError::InvalidInput(format!("{name} = {v}")))
    }
}

/// Computes the recommended speed band.
pub fn advise(input: &AdvisoryInput, config: &AdvisorConfig) -> Result<SpeedBand, AdvisorError> {
    check("d_sig_m", input.d_sig_m, false)?;
    check("t_current_s", input.t_current_s, false)?;
    check("v_lim_mps", input.v_lim_mps, true)?;
    check("ego_speed_mps", input.ego_speed_mps, false)?;
    check("red_after_amber_s", input.red_after_amber_s, false)?;
    if let Some(lead) = &input.lead {
        check("lead.gap_m", lead.gap_m, true)?;
        check("lead.lead_speed_mps", lead.lead_speed_mps, false)?;
        if !lead.relative_speed_mps.is_finite() {
            return Err(AdvisorError::InvalidInput("lead.relative_speed_mps".into()));
        }
    }

    // a truck is never advised to beat an amber: time it against the
    // following red instead
    let (phase, t) = match input.phase {
        PhaseColor::Amber => (PhaseColor::Red, input.t_current_s + input.red_after_amber_s),
        p => (p, input.t_current_s),
    };
    let v0 = reference_speed(input.d_sig_m, t)?;
    let v_lim = input.v_lim_mps;

    let (mut lower, mut upper) = match phase {
        PhaseColor::Red => (0.0, v0.min(v_lim)),
        _ if v0 <= v_lim => (v0, v_lim),
        _ => (0.0, 0.0),
    };
    let mut gating = Gating::Active;

    if let Some(lead) = &input.lead {
        if lead.lead_speed_mps < upper {
            upper = lead.lead_speed_mps;
            lower = lower.min(upper);
            gating = Gating::CappedByLead;
        }
        if time_to_collision(lead).is_some_and(|ttc| ttc < config.ttc_threshold_s) {
            gating = Gating::SuppressedTtc;
        }
    }

    Ok(SpeedBand {
        v_lower_mps: lower,
        v_upper_mps: upper,
        gating,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(phase: PhaseColor, d: f64, t: f64, v_lim: f64) -> AdvisoryInput {
        AdvisoryInput {
            d_sig_m: d,
            phase,
            t_current_s: t,
            v_lim_mps: v_lim,
            ego_speed_mps: 10.0,
            lead: None,
            spat_age_ms: 0,
            red_after_amber_s: 0.0,
        }
    }

    fn band(i: &AdvisoryInput) -> SpeedBand {
        advise(i, &AdvisorConfig::default()).unwrap()
    }

    #[test]
    fn reference_speed_cases() {
        assert_eq!(reference_speed(100.0, 10.0).unwrap(), 10.0);
        assert_eq!(reference_speed(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(reference_speed(100.0, 0.0).unwrap(), f64::INFINITY);
        assert!(reference_speed(-1.0, 10.0).is_err());
        assert!(reference_speed(1.0, -10.0).is_err());
    }

    #[test]
    fn red_bands() {
        let b = band(&input(PhaseColor::Red, 100.0, 10.0, 15.0));
        assert_eq!((b.v_lower_mps, b.v_upper_mps, b.gating), (0.0, 10.0, Gating::Active));
        let b = band(&input(PhaseColor::Red, 200.0, 10.0, 15.0));
        assert_eq!((b.v_lower_mps, b.v_upper_mps), (0.0, 15.0));
    }

    #[test]
    fn green_bands() {
        let b = band(&input(PhaseColor::Green, 100.0, 10.0, 15.0));
        assert_eq!((b.v_lower_mps, b.v_upper_mps, b.gating), (10.0, 15.0, Gating::Active));
        let b = band(&input(PhaseColor::Green, 200.0, 10.0, 15.0));
        assert_eq!((b.v_lower_mps, b.v_upper_mps), (0.0, 0.0));
    }

    #[test]
    fn amber_is_timed_against_the_following_red() {
        let mut i = input(PhaseColor::Amber, 150.0, 3.0, 15.0);
        i.red_after_amber_s = 27.0;
        let b = band(&i);
        assert_eq!((b.v_lower_mps, b.v_upper_mps), (0.0, 5.0));
    }

    #[test]
    fn lead_caps_upper_bound() {
        let mut i = input(PhaseColor::Green, 100.0, 10.0, 15.0);
        i.lead = Some(LeadVehicleObservation {
            gap_m: 60.0,
            lead_speed_mps: 12.0,
            relative_speed_mps: -2.0,
        });
        let b = band(&i);
        assert_eq!((b.v_lower_mps, b.v_upper_mps, b.gating), (10.0, 12.0, Gating::CappedByLead));
    }

    #[test]
    fn slow_lead_does_not_invert_the_band() {
        let mut i = input(PhaseColor::Green, 100.0, 10.0, 15.0);
        i.lead = Some(LeadVehicleObservation {
            gap_m: 80.0,
            lead_speed_mps: 8.0,
            relative_speed_mps: 1.0,
        });
        let b = band(&i);
        assert!(b.v_lower_mps <= b.v_upper_mps);
        assert_eq!(b.v_upper_mps, 8.0);
    }

    #[test]
    fn short_ttc_suppresses() {
        let mut i = input(PhaseColor::Green, 100.0, 10.0, 15.0);
        i.lead = Some(LeadVehicleObservation {
            gap_m: 20.0,
            lead_speed_mps: 5.0,
            relative_speed_mps: 10.0,
        });
        assert_eq!(band(&i).gating, Gating::SuppressedTtc);
    }

    #[test]
    fn ttc_cases() {
        let obs = |gap, rel| LeadVehicleObservation {
            gap_m: gap,
            lead_speed_mps: 10.0,
            relative_speed_mps: rel,
        };
        assert_eq!(time_to_collision(&obs(50.0, 10.0)), Some(5.0));
        assert_eq!(time_to_collision(&obs(50.0, 0.0)), None);
        assert_eq!(time_to_collision(&obs(50.0, -3.0)), None);
        assert_eq!(time_to_collision(&obs(2.0, 0.5)), Some(4.0));
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let cfg = AdvisorConfig::default();
        assert!(advise(&input(PhaseColor::Red, -1.0, 10.0, 15.0), &cfg).is_err());
        assert!(advise(&input(PhaseColor::Red, 1.0, f64::NAN, 15.0), &cfg).is_err());
        assert!(advise(&input(PhaseColor::Red, 1.0, 10.0, 0.0), &cfg).is_err());
    }
}
