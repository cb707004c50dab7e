//! Runs both drivers on each shipped approach and compares their fuel use.
//!
//! ```text
//! cargo run --example fuel_comparison
//! ```

use ecodrive::cli::ComparisonReport;
use ecodrive::energy::EnergyParams;
use ecodrive::fixtures;
use ecodrive::sim::{run_scenario, DriverKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = EnergyParams::default();
    for name in ["acceleration_eco", "deceleration_eco"] {
        let eco = fixtures::scenario(name)?;
        let base = eco.with_driver(DriverKind::Baseline);
        let report = ComparisonReport::new(&run_scenario(&base)?, &run_scenario(&eco)?, &params)?;
        println!(
            "{:<13} baseline {:>6.1} g ({} stops)  eco {:>6.1} g ({} stops)  savings {:>5.2}%",
            report.scenario,
            report.baseline.fuel.total_g,
            report.baseline.fuel.stops_count,
            report.eco.fuel.total_g,
            report.eco.fuel.stops_count,
            report.savings_percent()
        );
        if let Some(v) = report.verdicts() {
            println!("{:<13} verdicts {v:?}", "");
        }
    }
    Ok(())
}
