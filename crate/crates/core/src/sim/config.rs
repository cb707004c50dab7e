use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DriverKind, DriverParams, LeadKeyframe, Route, SimError, TruckParams};
use crate::advisor::AdvisorConfig;
use crate::energy::EnergyParams;
use crate::geo::{MapGraph, SignalRef};
use crate::spat::{ChannelModel, Controller, PhaseColor, PhasePlan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartState {
    pub segment: String,
    #[serde(default)]
    pub offset_m: f64,
    pub speed_mps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanEntry {
    pub intersection_id: u32,
    pub signal_group_id: u32,
    pub phases: Vec<(PhaseColor, f64)>,
    #[serde(default)]
    pub cycle_offset_s: f64,
}

impl PlanEntry {
    pub fn signal(&self) -> SignalRef {
        SignalRef {
            intersection_id: self.intersection_id,
            signal_group_id: self.signal_group_id,
        }
    }
}

fn default_dt() -> f64 {
    0.1
}

/// A scenario as written in its TOML file. `map` is a path relative to the
/// file that names it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub map: String,
    pub driver: DriverKind,
    #[serde(default)]
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    /// The run ends once the truck has covered this distance. Runs compared
    /// for fuel must share it.
    #[serde(default)]
    pub end_odometer_m: Option<f64>,
    pub start: StartState,
    pub plans: Vec<PlanEntry>,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub advisor: AdvisorConfig,
    #[serde(default)]
    pub truck: TruckParams,
    #[serde(default)]
    pub driver_params: DriverParams,
    #[serde(default)]
    pub energy: EnergyParams,
    #[serde(default)]
    pub lead: Vec<LeadKeyframe>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    pub fn dt_ms(&self) -> u64 {
        (self.dt_s * 1000.0).round() as u64
    }
}

/// Everything that fixes the approach a truck faces: comparing fuel between
/// runs is only fair when this digest matches.
#[derive(Serialize)]
struct DigestDoc<'a> {
    map: String,
    plans: Vec<&'a PlanEntry>,
    start: &'a StartState,
    dt_s: f64,
    duration_s: f64,
    end_odometer_m: Option<f64>,
    truck: &'a TruckParams,
    lead: &'a [LeadKeyframe],
}

/// A validated configuration bound to its map.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub map: Arc<MapGraph>,
    pub route: Route,
    pub plans: HashMap<SignalRef, PhasePlan>,
    digest: String,
}

impl Scenario {
    pub fn new(config: ScenarioConfig, map: impl Into<Arc<MapGraph>>) -> Result<Self, SimError> {
        let map: Arc<MapGraph> = map.into();
        let dt_ms = config.dt_ms();
        if !(config.dt_s.is_finite() && config.dt_s > 0.0)
            || dt_ms == 0
            || (config.dt_s * 1000.0 - dt_ms as f64).abs() > 1e-6
            || 1000 % dt_ms != 0
        {
            return Err(SimError::Config(format!(
                "dt_s = {} must divide one second into whole milliseconds",
                config.dt_s
            )));
        }
        if !(config.duration_s.is_finite() && config.duration_s > 0.0) {
            return Err(SimError::Config(format!("duration_s = {} must be positive", config.duration_s)));
        }
        if let Some(end) = config.end_odometer_m {
            if !(end.is_finite() && end > 0.0) {
                return Err(SimError::Config(format!("end_odometer_m = {end} must be positive")));
            }
        }
        config.truck.validate().map_err(SimError::Config)?;
        config.driver_params.validate().map_err(SimError::Config)?;
        config
            .energy
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        config.channel.validate()?;
        let a = &config.advisor;
        for (name, v) in [
            ("ttc_threshold_s", a.ttc_threshold_s),
            ("staleness_s", a.staleness_s),
            ("rate_hz", a.rate_hz),
            ("perception_range_m", a.perception_range_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::Config(format!("advisor.{name} must be positive, got {v}")));
            }
        }
        let s = config.start.speed_mps;
        if !(s.is_finite() && (0.0..=config.truck.max_speed_mps).contains(&s)) {
            return Err(SimError::Config(format!("start speed {s} outside [0, max_speed_mps]")));
        }
        // the advisory tick must land on simulation steps
        let period_ms = (1000.0 / a.rate_hz).round() as u64;
        if period_ms == 0 || period_ms % dt_ms != 0 {
            return Err(SimError::Config(format!(
                "advisor rate {} Hz is not a multiple of the step dt {} s",
                a.rate_hz, config.dt_s
            )));
        }

        let mut plans = HashMap::new();
        for entry in &config.plans {
            let signal = entry.signal();
            if map.signal_node(signal).is_none() {
                return Err(SimError::Config(format!(
                    "plan for intersection {} group {} has no signal in the map",
                    signal.intersection_id, signal.signal_group_id
                )));
            }
            let plan = PhasePlan::new(entry.phases.clone(), entry.cycle_offset_s)?;
            if plans.insert(signal, plan).is_some() {
                return Err(SimError::Config(format!(
                    "duplicate plan for intersection {} group {}",
                    signal.intersection_id, signal.signal_group_id
                )));
            }
        }
        let route = Route::new(&map, &config.start.segment, config.start.offset_m)?;
        for (_, sig) in route.signal_odometers() {
            if !plans.contains_key(&sig) {
                return Err(SimError::Config(format!(
                    "no phase plan for intersection {} group {} on the route",
                    sig.intersection_id, sig.signal_group_id
                )));
            }
        }

        let mut sorted: Vec<&PlanEntry> = config.plans.iter().collect();
        sorted.sort_by_key(|p| p.signal());
        let doc = DigestDoc {
            map: map.to_toml(),
            plans: sorted,
            start: &config.start,
            dt_s: config.dt_s,
            duration_s: config.duration_s,
            end_odometer_m: config.end_odometer_m,
            truck: &config.truck,
            lead: &config.lead,
        };
        let bytes = serde_json::to_vec(&doc).expect("digest document always serializes");
        let digest = hex::encode(Sha256::digest(&bytes));

        Ok(Scenario {
            config,
            map,
            route,
            plans,
            digest,
        })
    }

    /// Loads a scenario file and the map it names.
    pub fn load_file(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let config = ScenarioConfig::from_toml(&text)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let map_path = path.parent().unwrap_or(Path::new(".")).join(&config.map);
        let map_text = std::fs::read_to_string(&map_path).map_err(|source| SimError::Read {
            path: map_path.display().to_string(),
            source,
        })?;
        let map = MapGraph::load(&map_text)?;
        Scenario::new(config, map)
    }

    /// Hex SHA-256 over map, plans, start state, step, horizon, truck and
    /// lead script. Driver, seed and channel are deliberately excluded.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn controllers(&self) -> Vec<Controller> {
        let mut c: Vec<Controller> = self
            .plans
            .iter()
            .map(|(&signal, plan)| Controller {
                signal,
                plan: plan.clone(),
            })
            .collect();
        c.sort_by_key(|c| c.signal);
        c
    }

    /// Applies `edit` to a copy of the configuration and validates it
    /// against the same map.
    pub fn modified(&self, edit: impl FnOnce(&mut ScenarioConfig)) -> Result<Scenario, SimError> {
        let mut config = self.config.clone();
        edit(&mut config);
        Scenario::new(config, Arc::clone(&self.map))
    }

    pub fn with_driver(&self, driver: DriverKind) -> Scenario {
        self.modified(|c| c.driver = driver)
            .expect("changing the driver keeps a valid scenario valid")
    }
}
