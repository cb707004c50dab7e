use super::AdvisoryRecord;

/// Band changes smaller than this within one hold window are not shown.
pub const DISPLAY_HYSTERESIS_MPS: f64 = 0.25;
pub const DISPLAY_HOLD_MS: u64 = 1_000;

/// Smooths the band shown on the DVI. Every record is passed through (the
/// speedometer still updates at the loop rate), but a band that moved by
/// less than [`DISPLAY_HYSTERESIS_MPS`] within [`DISPLAY_HOLD_MS`] of the last
/// shown band is replaced by the last shown band. Gating or phase changes
/// always show immediately. Logged advisories never go through this filter.
#[derive(Debug, Default)]
pub struct DisplayFilter {
    shown: Option<AdvisoryRecord>,
}

impl DisplayFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, record: AdvisoryRecord) -> AdvisoryRecord {
        let Some(shown) = self.shown else {
            self.shown = Some(record);
            return record;
        };
        let small = (record.v_lower_mps - shown.v_lower_mps).abs() < DISPLAY_HYSTERESIS_MPS
            && (record.v_upper_mps - shown.v_upper_mps).abs() < DISPLAY_HYSTERESIS_MPS;
        let within = record.t_ms.saturating_sub(shown.t_ms) < DISPLAY_HOLD_MS;
        let same_state = record.gating == shown.gating && record.phase == shown.phase;
        if small && within && same_state {
            AdvisoryRecord {
                v_lower_mps: shown.v_lower_mps,
                v_upper_mps: shown.v_upper_mps,
                ..record
            }
        } else {
            self.shown = Some(record);
            record
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::Gating;
    use crate::spat::PhaseColor;

    fn rec(t_ms: u64, lo: f64, hi: f64) -> AdvisoryRecord {
        AdvisoryRecord {
            t_ms,
            d_sig_m: Some(100.0),
            phase: Some(PhaseColor::Green),
            t_used_s: Some(10.0),
            v_lower_mps: lo,
            v_upper_mps: hi,
            gating: Gating::Active,
            ego_speed_mps: 11.0,
        }
    }

    #[test]
    fn small_changes_are_coalesced_within_a_second() {
        let mut f = DisplayFilter::new();
        assert_eq!(f.apply(rec(0, 10.0, 15.0)).v_lower_mps, 10.0);
        let r = f.apply(rec(100, 10.1, 15.0));
        assert_eq!(r.v_lower_mps, 10.0);
        assert_eq!(r.t_ms, 100);
        assert_eq!(f.apply(rec(200, 10.3, 15.0)).v_lower_mps, 10.3);
        // after the hold window even a small change shows
        assert_eq!(f.apply(rec(1_200, 10.35, 15.0)).v_lower_mps, 10.35);
    }

    #[test]
    fn gating_change_shows_immediately() {
        let mut f = DisplayFilter::new();
        f.apply(rec(0, 10.0, 15.0));
        let mut r = rec(100, 10.05, 15.0);
        r.gating = Gating::CappedByLead;
        assert_eq!(f.apply(r).v_lower_mps, 10.05);
    }
}
