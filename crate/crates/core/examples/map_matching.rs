//! Matches a drifting GNSS trace to the corridor map and prints the
//! along-road distance to the next signal.
//!
//! ```text
//! cargo run --example map_matching
//! ```

use ecodrive::fixtures;
use ecodrive::geo::{heading_unit, match_to_map};
use ecodrive::sim::Route;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = fixtures::map("carson_corridor.toml")?;
    let route = Route::new(&map, "car-eb-01", 0.0)?;
    println!("{:>8} {:>7} {:>12} {:>10} {:>10}", "odo_m", "drift_m", "segment", "d_sig_m", "lateral_m");
    for (k, odo) in (0..12).map(|k| (k, 40.0 + 230.0 * k as f64)) {
        let (p, heading) = route.pose(odo);
        // alternate left and right drift of up to 3 m
        let drift = 3.0 * ((k as f64) * 1.3).sin();
        let [e, n] = heading_unit(heading + 90.0);
        let gnss = p.offset(e * drift, n * drift);
        let m = match_to_map(gnss, heading, &map)?;
        println!(
            "{odo:>8.1} {drift:>7.2} {:>12} {:>10.2} {:>10.2}",
            m.segment_id, m.distance_to_signal_m, m.lateral_error_m
        );
    }
    Ok(())
}
