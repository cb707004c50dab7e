//! Deterministic fixed-step simulation of a truck approaching signals.
//!
//! One scenario runs on one simulated clock: controllers broadcast SPaT on
//! whole seconds, the link model delays or drops it, the advisory loop
//! computes a band, a driver model turns what it sees into an acceleration,
//! and the point-mass truck moves along its route. Every step is logged.

mod config;
mod driver;
mod lead;
mod log;
mod route;
mod scenario;
mod truck;

pub use config::{PlanEntry, Scenario, ScenarioConfig, StartState};
pub use driver::{
    eco_driver, idm_accel, BaselineDriver, Driver, DriverCommand, DriverKind, DriverParams,
    DriverView, EcoDriver,
};
pub use lead::{LeadKeyframe, LeadVehicle};
pub use log::{Crossing, LogHeader, LogRow, TrajectoryLog, COLUMNS};
pub use route::Route;
pub use scenario::{run_scenario, run_scenario_with, Override, Simulation, Transport};
pub use truck::{integrate, step_truck, Step, TruckParams, TruckState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed trajectory log: {0}")]
    Log(String),
    #[error(transparent)]
    Map(#[from] crate::geo::MapLoadError),
    #[error(transparent)]
    Spat(#[from] crate::spat::SpatError),
}
