//! Prints the advised speed band for a truck 400 m from the stop line
//! across the signal states it could meet.
//!
//! ```text
//! cargo run --example speed_band
//! ```

use ecodrive::advisor::{advise, AdvisorConfig, AdvisoryInput, LeadVehicleObservation};
use ecodrive::spat::PhaseColor;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = AdvisorConfig::default();
    let base = AdvisoryInput {
        d_sig_m: 400.0,
        phase: PhaseColor::Green,
        t_current_s: 0.0,
        v_lim_mps: 24.6,
        ego_speed_mps: 20.0,
        lead: None,
        spat_age_ms: 0,
        red_after_amber_s: 30.0,
    };
    let cases = [
        ("green, 25 s left", PhaseColor::Green, 25.0, None),
        ("green, 12 s left", PhaseColor::Green, 12.0, None),
        ("amber, 2 s left", PhaseColor::Amber, 2.0, None),
        ("red, 30 s left", PhaseColor::Red, 30.0, None),
        ("red, 10 s left", PhaseColor::Red, 10.0, None),
        (
            "red, 30 s left, slow lead 60 m ahead",
            PhaseColor::Red,
            30.0,
            Some(LeadVehicleObservation {
                gap_m: 60.0,
                lead_speed_mps: 9.0,
                relative_speed_mps: 11.0,
            }),
        ),
        (
            "green, 25 s left, lead 20 m ahead closing",
            PhaseColor::Green,
            25.0,
            Some(LeadVehicleObservation {
                gap_m: 20.0,
                lead_speed_mps: 12.0,
                relative_speed_mps: 8.0,
            }),
        ),
    ];
    for (label, phase, t, lead) in cases {
        let band = advise(
            &AdvisoryInput {
                phase,
                t_current_s: t,
                lead,
                ..base
            },
            &config,
        )?;
        println!(
            "{label:<42} [{:>5.2}, {:>5.2}] m/s  {}",
            band.v_lower_mps,
            band.v_upper_mps,
            band.gating.as_str()
        );
    }
    Ok(())
}
