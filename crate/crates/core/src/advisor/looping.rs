use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{advise, AdvisorConfig, AdvisoryInput, Gating, LeadVehicleObservation, SpeedBand};
use crate::geo::{match_lane, GeoPoint, MapGraph, SignalRef};
use crate::spat::{Delivered, PhaseColor, PhasePlan, SpatMessage};

/// Latest-value cell shared between a producer and the advisory loop.
/// Writers overwrite; readers take a copy. Neither side waits on the other
/// beyond the copy itself.
#[derive(Debug)]
pub struct Mailbox<T>(Arc<Mutex<Option<T>>>);

impl<T> Clone for Mailbox<T> {
    fn clone(&self) -> Self {
        Mailbox(Arc::clone(&self.0))
    }
}

impl<T> Default for Mailbox<T> {
    fn default() -> Self {
        Mailbox(Arc::new(Mutex::new(None)))
    }
}

impl<T: Clone> Mailbox<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&self, value: T) {
        *self.0.lock().expect("mailbox poisoned") = Some(value);
    }

    pub fn clear(&self) {
        *self.0.lock().expect("mailbox poisoned") = None;
    }

    pub fn latest(&self) -> Option<T> {
        self.0.lock().expect("mailbox poisoned").clone()
    }
}

/// Newest SPaT message per signal group.
#[derive(Debug, Clone, Default)]
pub struct SpatStore {
    latest: HashMap<SignalRef, SpatMessage>,
}

impl SpatStore {
    pub fn ingest(&mut self, message: SpatMessage) {
        let slot = self.latest.entry(message.signal()).or_insert(message);
        if message.timestamp_ms >= slot.timestamp_ms {
            *slot = message;
        }
    }

    pub fn ingest_all(&mut self, delivered: &[Delivered]) {
        for d in delivered {
            self.ingest(d.message);
        }
    }

    pub fn get(&self, signal: SignalRef) -> Option<&SpatMessage> {
        self.latest.get(&signal)
    }
}

/// GNSS fix and CAN speed as seen by the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization {
    pub position: GeoPoint,
    pub heading_deg: f64,
    pub speed_mps: f64,
}

/// One planning cycle: the band plus everything it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisoryOutput {
    pub t_ms: u64,
    pub band: SpeedBand,
    /// Present whenever `advise` actually ran.
    pub input: Option<AdvisoryInput>,
    pub signal: Option<SignalRef>,
    pub d_sig_m: Option<f64>,
    pub v_lim_mps: f64,
    pub ego_speed_mps: f64,
}

impl AdvisoryOutput {
    pub fn phase(&self) -> Option<PhaseColor> {
        self.input.map(|i| i.phase)
    }

    pub fn t_used_s(&self) -> Option<f64> {
        self.input.map(|i| i.t_current_s)
    }

    pub fn to_record(&self) -> AdvisoryRecord {
        AdvisoryRecord {
            t_ms: self.t_ms,
            d_sig_m: self.d_sig_m,
            phase: self.phase(),
            t_used_s: self.t_used_s(),
            v_lower_mps: self.band.v_lower_mps,
            v_upper_mps: self.band.v_upper_mps,
            gating: self.band.gating,
            ego_speed_mps: self.ego_speed_mps,
        }
    }
}

/// Advisory stream record, one JSON object per line, for the UI and logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisoryRecord {
    pub t_ms: u64,
    pub d_sig_m: Option<f64>,
    pub phase: Option<PhaseColor>,
    pub t_used_s: Option<f64>,
    pub v_lower_mps: f64,
    pub v_upper_mps: f64,
    pub gating: Gating,
    pub ego_speed_mps: f64,
}

impl AdvisoryRecord {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("record always serializes");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line.trim_end())
    }
}

/// The planning loop: at every tick it matches the truck to the map, picks
/// the newest SPaT for the governing signal group, ages its residual, and
/// computes the band.
#[derive(Debug)]
pub struct AdvisoryLoop {
    map: Arc<MapGraph>,
    plans: HashMap<SignalRef, PhasePlan>,
    config: AdvisorConfig,
    spat: SpatStore,
    last_v_lim: f64,
    log: Vec<AdvisoryOutput>,
    keep_log: bool,
}

impl AdvisoryLoop {
    pub fn new(map: Arc<MapGraph>, plans: HashMap<SignalRef, PhasePlan>, config: AdvisorConfig) -> Self {
        AdvisoryLoop {
            map,
            plans,
            config,
            spat: SpatStore::default(),
            last_v_lim: 0.0,
            log: Vec::new(),
            keep_log: true,
        }
    }

    pub fn without_log(mut self) -> Self {
        self.keep_log = false;
        self
    }

    pub fn config(&self) -> &AdvisorConfig {
        &self.config
    }

    pub fn spat_mut(&mut self) -> &mut SpatStore {
        &mut self.spat
    }

    pub fn ingest(&mut self, delivered: &[Delivered]) {
        self.spat.ingest_all(delivered);
    }

    pub fn log(&self) -> &[AdvisoryOutput] {
        &self.log
    }

    /// Reads the latest localization and lead observation and runs one cycle.
    /// Returns `None` until a localization fix has been published.
    pub fn tick_from(
        &mut self,
        now_ms: u64,
        localization: &Mailbox<Localization>,
        lead: &Mailbox<LeadVehicleObservation>,
    ) -> Option<AdvisoryOutput> {
        let loc = localization.latest()?;
        Some(self.tick(now_ms, &loc, lead.latest()))
    }

    pub fn tick(
        &mut self,
        now_ms: u64,
        loc: &Localization,
        lead: Option<LeadVehicleObservation>,
    ) -> AdvisoryOutput {
        let out = self.compute(now_ms, loc, lead);
        if self.keep_log {
            self.log.push(out.clone());
        }
        out
    }

    fn compute(
        &mut self,
        now_ms: u64,
        loc: &Localization,
        lead: Option<LeadVehicleObservation>,
    ) -> AdvisoryOutput {
        let ego = loc.speed_mps.max(0.0);
        let mut out = AdvisoryOutput {
            t_ms: now_ms,
            band: SpeedBand::no_signal(self.last_v_lim),
            input: None,
            signal: None,
            d_sig_m: None,
            v_lim_mps: self.last_v_lim,
            ego_speed_mps: ego,
        };

        let Ok(lane) = match_lane(loc.position, loc.heading_deg, &self.map) else {
            return out;
        };
        let seg = &self.map.segments()[lane.segment_index];
        self.last_v_lim = seg.speed_limit_mps;
        out.v_lim_mps = seg.speed_limit_mps;
        out.band = SpeedBand::no_signal(seg.speed_limit_mps);

        let next = self.map.next_signal(lane.segment_index);
        let Some((signal, chain_m)) = next.filter(|_| !lane.past_map_end) else {
            return out;
        };
        let d_sig = lane.remaining_m + chain_m;
        out.signal = Some(signal);
        out.d_sig_m = Some(d_sig);

        let Some(msg) = self.spat.get(signal).copied() else {
            return out;
        };
        let age_ms = now_ms.saturating_sub(msg.timestamp_ms);
        if age_ms as f64 > self.config.staleness_s * 1000.0 {
            return out;
        }
        let t_used = (msg.time_remaining_s as f64 - age_ms as f64 / 1000.0).max(0.0);
        let red_after_amber_s = match msg.phase {
            PhaseColor::Amber => self
                .plans
                .get(&signal)
                .map_or(0.0, |p| p.red_after_amber_s(msg.timestamp_ms)),
            _ => 0.0,
        };
        let lead = lead.filter(|l| l.gap_m <= self.config.perception_range_m);
        let input = AdvisoryInput {
            d_sig_m: d_sig,
            phase: msg.phase,
            t_current_s: t_used,
            v_lim_mps: seg.speed_limit_mps,
            ego_speed_mps: ego,
            lead,
            spat_age_ms: age_ms,
            red_after_amber_s,
        };
        match advise(&input, &self.config) {
            Ok(band) => {
                out.band = band;
                out.input = Some(input);
            }
            Err(e) => log::warn!("advisory skipped at {now_ms} ms: {e}"),
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn map() -> Arc<MapGraph> {
        let o = GeoPoint::new(33.80, -118.26);
        let b = o.offset(0.0, 500.0);
        let text = format!(
            r#"
            nodes = [ {{ id = "a", lat = {}, lon = {} }}, {{ id = "b", lat = {}, lon = {} }} ]
            segments = [ {{ id = "s", from = "a", to = "b", speed_limit_mps = 15.0, road_name = "R", heading_deg = 0.0 }} ]
            signals = [ {{ node_id = "b", intersection_id = 1, signal_group_id = 2 }} ]
            "#,
            o.lat, o.lon, b.lat, b.lon
        );
        Arc::new(MapGraph::load(&text).unwrap())
    }

    fn sig() -> SignalRef {
        SignalRef {
            intersection_id: 1,
            signal_group_id: 2,
        }
    }

    fn at(north: f64) -> Localization {
        Localization {
            position: GeoPoint::new(33.80, -118.26).offset(0.0, north),
            heading_deg: 0.0,
            speed_mps: 10.0,
        }
    }

    #[test]
    fn residual_is_aged_by_message_age() {
        let mut l = AdvisoryLoop::new(map(), HashMap::new(), AdvisorConfig::default());
        l.spat_mut().ingest(SpatMessage {
            intersection_id: 1,
            signal_group_id: 2,
            phase: PhaseColor::Red,
            time_remaining_s: 10,
            timestamp_ms: 5_000,
        });
        let out = l.tick(5_400, &at(100.0), None);
        let t_used = out.t_used_s().unwrap();
        assert!((t_used - 9.6).abs() < 1e-12);
        let input = out.input.unwrap();
        assert!((t_used + input.spat_age_ms as f64 / 1000.0 - 10.0).abs() < 1e-12);
        assert_eq!(out.band.gating, Gating::Active);
        assert!((out.d_sig_m.unwrap() - 400.0).abs() < 1e-3);
    }

    #[test]
    fn stale_spat_gives_no_signal() {
        let mut l = AdvisoryLoop::new(map(), HashMap::new(), AdvisorConfig::default());
        l.spat_mut().ingest(SpatMessage {
            intersection_id: 1,
            signal_group_id: 2,
            phase: PhaseColor::Red,
            time_remaining_s: 10,
            timestamp_ms: 5_000,
        });
        assert_eq!(l.tick(8_000, &at(100.0), None).band.gating, Gating::NoSignal);
        assert_eq!(l.tick(7_400, &at(100.0), None).band.gating, Gating::Active);
    }

    #[test]
    fn older_messages_never_replace_newer() {
        let mut store = SpatStore::default();
        let m = |t| SpatMessage {
            intersection_id: 1,
            signal_group_id: 2,
            phase: PhaseColor::Green,
            time_remaining_s: 3,
            timestamp_ms: t,
        };
        store.ingest(m(2_000));
        store.ingest(m(1_000));
        assert_eq!(store.get(sig()).unwrap().timestamp_ms, 2_000);
    }

    #[test]
    fn mailboxes_feed_the_loop() {
        let mut l = AdvisoryLoop::new(map(), HashMap::new(), AdvisorConfig::default());
        let loc = Mailbox::new();
        let lead = Mailbox::new();
        assert!(l.tick_from(0, &loc, &lead).is_none());
        loc.put(at(10.0));
        let out = l.tick_from(0, &loc, &lead).unwrap();
        assert_eq!(out.band.gating, Gating::NoSignal);
        assert_eq!(out.signal, Some(sig()));
    }

    #[test]
    fn record_line_round_trip() {
        let rec = AdvisoryRecord {
            t_ms: 100,
            d_sig_m: Some(12.5),
            phase: Some(PhaseColor::Red),
            t_used_s: None,
            v_lower_mps: 0.0,
            v_upper_mps: 3.0,
            gating: Gating::CappedByLead,
            ego_speed_mps: 2.0,
        };
        let line = rec.to_line();
        assert!(line.contains("\"gating\":\"CAPPED_BY_LEAD\""));
        assert_eq!(AdvisoryRecord::from_line(&line).unwrap(), rec);
    }
}
