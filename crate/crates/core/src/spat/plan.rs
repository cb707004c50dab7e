use serde::{Deserialize, Serialize};

use super::{SpatError, SpatMessage};
use crate::geo::SignalRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PhaseColor {
    Green,
    Amber,
    Red,
}

impl PhaseColor {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseColor::Green => "GREEN",
            PhaseColor::Amber => "AMBER",
            PhaseColor::Red => "RED",
        }
    }
}

impl std::fmt::Display for PhaseColor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PhaseColor {
    type Err = SpatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "GREEN" => Ok(PhaseColor::Green),
            "AMBER" => Ok(PhaseColor::Amber),
            "RED" => Ok(PhaseColor::Red),
            other => Err(SpatError::InvalidPlan(format!("unknown phase {other:?}"))),
        }
    }
}

/// One fixed-time cycle of a signal group.
///
/// Durations are held internally in whole milliseconds so that every
/// controller query is exact integer arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanDoc", into = "PlanDoc")]
pub struct PhasePlan {
    phases: Vec<(PhaseColor, u64)>,
    cycle_offset_ms: u64,
    cycle_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    phases: Vec<(PhaseColor, f64)>,
    #[serde(default)]
    cycle_offset_s: f64,
}

impl TryFrom<PlanDoc> for PhasePlan {
    type Error = SpatError;

    fn try_from(doc: PlanDoc) -> Result<Self, Self::Error> {
        PhasePlan::new(doc.phases, doc.cycle_offset_s)
    }
}

impl From<PhasePlan> for PlanDoc {
    fn from(p: PhasePlan) -> Self {
        PlanDoc {
            phases: p.phases(),
            cycle_offset_s: p.cycle_offset_ms as f64 / 1000.0,
        }
    }
}

fn to_ms(seconds: f64, what: &str) -> Result<u64, SpatError> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(SpatError::InvalidPlan(format!("{what} must be finite and >= 0, got {seconds}")));
    }
    let ms = (seconds * 1000.0).round();
    if (ms - seconds * 1000.0).abs() > 1e-6 {
        return Err(SpatError::InvalidPlan(format!("{what} must be a whole number of milliseconds")));
    }
    Ok(ms as u64)
}

impl PhasePlan {
    pub fn new(phases: Vec<(PhaseColor, f64)>, cycle_offset_s: f64) -> Result<Self, SpatError> {
        if !phases.iter().any(|(c, _)| *c == PhaseColor::Green)
            || !phases.iter().any(|(c, _)| *c == PhaseColor::Red)
        {
            return Err(SpatError::InvalidPlan(
                "plan needs at least one GREEN and one RED interval".into(),
            ));
        }
        let phases = phases
            .into_iter()
            .map(|(c, d)| {
                let ms = to_ms(d, "phase duration")?;
                if ms == 0 {
                    return Err(SpatError::InvalidPlan("phase durations must be positive".into()));
                }
                Ok((c, ms))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cycle_ms = phases.iter().map(|(_, d)| d).sum();
        Ok(PhasePlan {
            phases,
            cycle_offset_ms: to_ms(cycle_offset_s, "cycle_offset_s")?,
            cycle_ms,
        })
    }

    /// Convenience for the common green/amber/red cycle.
    pub fn gar(green_s: f64, amber_s: f64, red_s: f64, cycle_offset_s: f64) -> Result<Self, SpatError> {
        PhasePlan::new(
            vec![
                (PhaseColor::Green, green_s),
                (PhaseColor::Amber, amber_s),
                (PhaseColor::Red, red_s),
            ],
            cycle_offset_s,
        )
    }

    pub fn phases(&self) -> Vec<(PhaseColor, f64)> {
        self.phases
            .iter()
            .map(|&(c, d)| (c, d as f64 / 1000.0))
            .collect()
    }

    pub fn cycle_s(&self) -> f64 {
        self.cycle_ms as f64 / 1000.0
    }

    pub fn cycle_offset_s(&self) -> f64 {
        self.cycle_offset_ms as f64 / 1000.0
    }

    /// Exact phase and residual time in milliseconds at scenario time `t_ms`.
    pub fn state_at_ms(&self, t_ms: u64) -> (PhaseColor, u64) {
        let (i, residual) = self.locate(t_ms);
        (self.phases[i].0, residual)
    }

    fn locate(&self, t_ms: u64) -> (usize, u64) {
        let mut tau = (t_ms + self.cycle_offset_ms) % self.cycle_ms;
        for (i, &(_, d)) in self.phases.iter().enumerate() {
            if tau < d {
                return (i, d - tau);
            }
            tau -= d;
        }
        unreachable!("tau is reduced modulo the cycle length")
    }

    /// Total duration of the red interval(s) that directly follow the amber
    /// active at `t_ms` (or the first amber in the cycle when `t_ms` is not in
    /// an amber interval).
    pub fn red_after_amber_s(&self, t_ms: u64) -> f64 {
        let (i, _) = self.locate(t_ms);
        let n = self.phases.len();
        let amber = if self.phases[i].0 == PhaseColor::Amber {
            Some(i)
        } else {
            self.phases.iter().position(|(c, _)| *c == PhaseColor::Amber)
        };
        let Some(amber) = amber else { return 0.0 };
        let mut total = 0;
        for k in 1..n {
            let (c, d) = self.phases[(amber + k) % n];
            if c != PhaseColor::Red {
                break;
            }
            total += d;
        }
        total as f64 / 1000.0
    }

    /// Time in milliseconds from `t_ms` until the next GREEN onset (0 when a
    /// green interval starts exactly at `t_ms`).
    pub fn ms_until_green_onset(&self, t_ms: u64) -> u64 {
        let (i, residual) = self.locate(t_ms);
        let n = self.phases.len();
        let mut acc = residual;
        for k in 1..=n {
            let (c, d) = self.phases[(i + k) % n];
            if c == PhaseColor::Green {
                return acc;
            }
            acc += d;
        }
        unreachable!("plan always contains a green interval")
    }
}

/// Phase and whole-second residual of a fixed-time controller at time `t`
/// seconds. The residual is floored, as a 1 Hz SPaT feed would report it.
/// `t` is resolved to the nearest millisecond.
pub fn controller_state(plan: &PhasePlan, t: f64) -> (PhaseColor, u32) {
    let t_ms = (t.max(0.0) * 1000.0).round() as u64;
    let (c, residual_ms) = plan.state_at_ms(t_ms);
    (c, (residual_ms / 1000) as u32)
}

/// A fixed-time controller driving one signal group.
#[derive(Debug, Clone, PartialEq)]
pub struct Controller {
    pub signal: SignalRef,
    pub plan: PhasePlan,
}

/// One SPaT message per signal group at scenario time `t_ms`.
pub fn broadcast_tick(controllers: &[Controller], t_ms: u64) -> Vec<SpatMessage> {
    controllers
        .iter()
        .map(|c| {
            let (phase, residual_ms) = c.plan.state_at_ms(t_ms);
            SpatMessage {
                intersection_id: c.signal.intersection_id,
                signal_group_id: c.signal.signal_group_id,
                phase,
                time_remaining_s: (residual_ms / 1000) as u32,
                timestamp_ms: t_ms,
            }
        })
        .collect()
}
