//! Runs a shipped scenario and prints a one-second trace of the truck and
//! the advice it was given.
//!
//! ```text
//! cargo run --example simulate -- deceleration_eco
//! ```

use ecodrive::fixtures;
use ecodrive::sim::run_scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "acceleration_eco".into());
    let scenario = fixtures::scenario(&name)?;
    let log = run_scenario(&scenario)?;
    println!("{name}: digest {}", scenario.digest());
    println!("{:>6} {:>7} {:>8} {:>6} {:>14} {:>15}", "t_s", "v_mps", "d_sig_m", "phase", "band_mps", "gating");
    for r in log.rows().iter().step_by(10) {
        println!(
            "{:>6.1} {:>7.2} {:>8} {:>6} {:>14} {:>15}",
            r.t_s,
            r.speed_mps,
            r.d_sig_m.map_or("-".into(), |d| format!("{d:.1}")),
            r.phase.map_or("-", |p| p.as_str()),
            format!("[{:.1}, {:.1}]", r.v_lower_mps, r.v_upper_mps),
            r.gating.as_str()
        );
    }
    for c in log.crossings() {
        println!("crossed a stop line at t = {:.1} s, {:.2} m/s", c.t_s, c.speed_mps);
    }
    Ok(())
}
