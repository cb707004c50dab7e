use serde::Serialize;
use thiserror::Error;

use crate::energy::{trip_fuel, EnergyError, EnergyParams, FuelSummary};
use crate::sim::TrajectoryLog;

/// An eco run counts as crossing without stopping only above this speed.
pub const NO_STOP_MIN_SPEED_MPS: f64 = 3.0;

#[derive(Debug, Error)]
pub enum CompareError {
    #[error(
        "refusing to compare runs of different approaches: {a_scenario} has digest {a_digest}, \
         {b_scenario} has digest {b_digest}"
    )]
    DigestMismatch {
        a_scenario: String,
        a_digest: String,
        b_scenario: String,
        b_digest: String,
    },
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Fuel savings window a scenario is expected to land in, keyed by the
/// scenario name in the log header.
pub fn savings_window(scenario: &str) -> Option<(f64, f64)> {
    match scenario {
        "acceleration" => Some((2.0, 25.0)),
        "deceleration" => Some((1.0, 15.0)),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub driver: String,
    pub fuel: FuelSummary,
    /// Lowest speed from the start of the log through the first stop-line
    /// crossing; the whole log when the line is never crossed.
    pub min_speed_through_mps: f64,
    pub crossed: bool,
}

impl RunSummary {
    fn of(log: &TrajectoryLog, params: &EnergyParams) -> Result<Self, CompareError> {
        let fuel = trip_fuel(log, params)?;
        let first = log.crossings().first().copied();
        let end = first.map_or(log.rows().len(), |c| c.row + 1);
        Ok(RunSummary {
            driver: log.header.driver.clone(),
            fuel,
            min_speed_through_mps: log.min_speed_until(end).unwrap_or(0.0),
            crossed: first.is_some(),
        })
    }
}

/// Pass/fail checks against the acceptance thresholds. Only defined when a
/// baseline run is compared with an eco run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub eco_uses_less_fuel: bool,
    /// `None` when the scenario has no declared window.
    pub savings_in_window: Option<bool>,
    pub baseline_stops: bool,
    pub eco_never_stops: bool,
}

impl Verdicts {
    pub fn all_pass(&self) -> bool {
        self.eco_uses_less_fuel
            && self.savings_in_window != Some(false)
            && self.baseline_stops
            && self.eco_never_stops
    }
}

/// Fuel and speed comparison of two runs over the same approach.
///
/// The first argument to [`ComparisonReport::new`] is the reference unless
/// the pair is one eco and one baseline run, in which case the baseline is
/// the reference regardless of order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub scenario: String,
    pub digest: String,
    pub baseline: RunSummary,
    pub eco: RunSummary,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    scenario: &'a str,
    digest: &'a str,
    savings_percent: f64,
    stop_count_delta: i64,
    min_speed_delta_mps: f64,
    all_pass: Option<bool>,
    verdicts: Option<Verdicts>,
    baseline: &'a RunSummary,
    eco: &'a RunSummary,
}

impl ComparisonReport {
    pub fn new(a: &TrajectoryLog, b: &TrajectoryLog, params: &EnergyParams) -> Result<Self, CompareError> {
        let (ha, hb) = (&a.header, &b.header);
        if ha.digest != hb.digest {
            return Err(CompareError::DigestMismatch {
                a_scenario: ha.scenario.clone(),
                a_digest: ha.digest.clone(),
                b_scenario: hb.scenario.clone(),
                b_digest: hb.digest.clone(),
            });
        }
        let (base, eco) = if ha.driver == "eco" && hb.driver == "baseline" {
            (b, a)
        } else {
            (a, b)
        };
        Ok(ComparisonReport {
            scenario: ha.scenario.clone(),
            digest: ha.digest.clone(),
            baseline: RunSummary::of(base, params)?,
            eco: RunSummary::of(eco, params)?,
        })
    }

    /// (baseline − eco) / baseline · 100.
    pub fn savings_percent(&self) -> f64 {
        let b = self.baseline.fuel.total_g;
        (b - self.eco.fuel.total_g) / b * 100.0
    }

    /// Eco stops minus baseline stops.
    pub fn stop_count_delta(&self) -> i64 {
        i64::from(self.eco.fuel.stops_count) - i64::from(self.baseline.fuel.stops_count)
    }

    /// Eco minimum speed minus baseline minimum speed.
    pub fn min_speed_delta_mps(&self) -> f64 {
        self.eco.min_speed_through_mps - self.baseline.min_speed_through_mps
    }

    pub fn verdicts(&self) -> Option<Verdicts> {
        if self.baseline.driver != "baseline" || self.eco.driver != "eco" {
            return None;
        }
        let savings = self.savings_percent();
        Some(Verdicts {
            eco_uses_less_fuel: self.eco.fuel.total_g < self.baseline.fuel.total_g,
            savings_in_window: savings_window(&self.scenario)
                .map(|(lo, hi)| (lo..=hi).contains(&savings)),
            baseline_stops: self.baseline.fuel.stops_count > 0,
            eco_never_stops: self.eco.fuel.stops_count == 0
                && self.eco.min_speed_through_mps > NO_STOP_MIN_SPEED_MPS,
        })
    }

    /// Report as TOML text.
    pub fn to_text(&self) -> String {
        let verdicts = self.verdicts();
        let doc = ReportDoc {
            scenario: &self.scenario,
            digest: &self.digest,
            savings_percent: self.savings_percent(),
            stop_count_delta: self.stop_count_delta(),
            min_speed_delta_mps: self.min_speed_delta_mps(),
            all_pass: verdicts.map(|v| v.all_pass()),
            verdicts,
            baseline: &self.baseline,
            eco: &self.eco,
        };
        toml::to_string(&doc).expect("report always serializes")
    }

    /// One CSV row per run, with a header line.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "role",
            "scenario",
            "driver",
            "total_g",
            "idle_g",
            "moving_g",
            "stops_count",
            "duration_s",
            "min_speed_through_mps",
            "savings_percent",
        ])
        .expect("in-memory csv");
        for (role, run) in [("baseline", &self.baseline), ("eco", &self.eco)] {
            let f = &run.fuel;
            w.write_record([
                role.to_string(),
                self.scenario.clone(),
                run.driver.clone(),
                format!("{:.6}", f.total_g),
                format!("{:.6}", f.idle_g),
                format!("{:.6}", f.moving_g),
                f.stops_count.to_string(),
                format!("{:.3}", f.duration_s),
                format!("{:.6}", run.min_speed_through_mps),
                format!("{:.6}", self.savings_percent()),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::Gating;
    use crate::sim::{LogHeader, LogRow};

    fn log(driver: &str, digest: &str, speeds: &[f64]) -> TrajectoryLog {
        let mut l = TrajectoryLog::new(LogHeader {
            scenario: "acceleration".into(),
            driver: driver.into(),
            digest: digest.into(),
            seed: 0,
            dt_s: "1".into(),
            code_version: "0".into(),
        });
        for (k, &v) in speeds.iter().enumerate() {
            l.push(LogRow {
                t_s: k as f64,
                lat: 0.0,
                lon: 0.0,
                speed_mps: v,
                accel_mps2: 0.0,
                d_sig_m: None,
                phase: None,
                v_lower_mps: 0.0,
                v_upper_mps: 0.0,
                gating: Gating::NoSignal,
                fuel_rate_gps: 0.0,
            });
        }
        l
    }

    #[test]
    fn self_comparison_is_exactly_zero() {
        let a = log("eco", "d", &[10.0, 12.0, 0.0, 0.0, 5.0]);
        let r = ComparisonReport::new(&a, &a, &EnergyParams::default()).unwrap();
        assert_eq!(r.savings_percent(), 0.0);
        assert_eq!(r.stop_count_delta(), 0);
        assert_eq!(r.min_speed_delta_mps(), 0.0);
        assert_eq!(r.verdicts(), None);
    }

    #[test]
    fn baseline_is_the_reference_in_either_order() {
        let b = log("baseline", "d", &[10.0, 0.0, 0.0, 0.0, 10.0]);
        let e = log("eco", "d", &[10.0, 10.0, 10.0, 10.0, 10.0]);
        let p = EnergyParams::default();
        let r1 = ComparisonReport::new(&b, &e, &p).unwrap();
        let r2 = ComparisonReport::new(&e, &b, &p).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.baseline.driver, "baseline");
        assert_eq!(r1.stop_count_delta(), -1);
    }

    #[test]
    fn digest_mismatch_is_refused() {
        let p = EnergyParams::default();
        let err = ComparisonReport::new(&log("eco", "x", &[1.0]), &log("baseline", "y", &[1.0]), &p)
            .unwrap_err();
        assert!(err.to_string().contains("x") && err.to_string().contains("y"));
    }

    #[test]
    fn csv_has_one_row_per_run() {
        let a = log("baseline", "d", &[10.0, 10.0]);
        let r = ComparisonReport::new(&a, &a, &EnergyParams::default()).unwrap();
        let text = r.to_csv();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().starts_with("role,scenario,driver,total_g"));
    }
}
