//! The shipped maps and scenarios, embedded so tests and examples do not
//! depend on the working directory.

use crate::geo::MapGraph;
use crate::sim::{Scenario, ScenarioConfig, SimError};

/// `(file name, TOML text)` for every shipped map.
pub const MAPS: &[(&str, &str)] = &[
    ("carson_approach.toml", include_str!("../fixtures/maps/carson_approach.toml")),
    ("carson_corridor.toml", include_str!("../fixtures/maps/carson_corridor.toml")),
];

/// `(fixture name, TOML text)` for every shipped scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("acceleration_baseline", include_str!("../fixtures/scenarios/acceleration_baseline.toml")),
    ("acceleration_eco", include_str!("../fixtures/scenarios/acceleration_eco.toml")),
    ("deceleration_baseline", include_str!("../fixtures/scenarios/deceleration_baseline.toml")),
    ("deceleration_eco", include_str!("../fixtures/scenarios/deceleration_eco.toml")),
    ("lead_vehicle_eco", include_str!("../fixtures/scenarios/lead_vehicle_eco.toml")),
    ("corridor_eco", include_str!("../fixtures/scenarios/corridor_eco.toml")),
];

/// Directory holding the fixture files on disk, for tools that take paths.
pub fn dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}

pub fn map(file_name: &str) -> Result<MapGraph, SimError> {
    let (_, text) = MAPS
        .iter()
        .find(|(n, _)| *n == file_name)
        .ok_or_else(|| SimError::Config(format!("no shipped map named {file_name}")))?;
    Ok(MapGraph::load(text)?)
}

/// Loads a shipped scenario by fixture name, e.g. `"acceleration_eco"`.
pub fn scenario(name: &str) -> Result<Scenario, SimError> {
    let (_, text) = SCENARIOS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| SimError::Config(format!("no shipped scenario named {name}")))?;
    let config = ScenarioConfig::from_toml(text)?;
    let file = std::path::Path::new(&config.map)
        .file_name()
        .and_then(|f| f.to_str())
        .unwrap_or_default()
        .to_string();
    Scenario::new(config, map(&file)?)
}
