use crate::geo::{bearing_deg, heading_difference, GeoPoint, MapGraph, SignalRef};

use super::SimError;

/// The path a simulated truck follows: a chain of segments from the start
/// position, walked downstream. At a branch the route prefers the branch
/// that still leads to a signal, then the straightest, then the lowest id.
#[derive(Debug, Clone)]
pub struct Route {
    segments: Vec<usize>,
    /// Chain distance of each segment's start node from the first node.
    starts: Vec<f64>,
    ends: Vec<(GeoPoint, GeoPoint)>,
    headings: Vec<f64>,
    speed_limits: Vec<f64>,
    /// Signal stop lines as chain distances, increasing.
    signals: Vec<(f64, SignalRef)>,
    start_offset_m: f64,
    length_m: f64,
}

impl Route {
    pub fn new(map: &MapGraph, start_segment: &str, offset_m: f64) -> Result<Self, SimError> {
        let first = map
            .segment_index(start_segment)
            .ok_or_else(|| SimError::Config(format!("start segment {start_segment:?} is not in the map")))?;
        let first_len = map.segments()[first].length_m;
        if !(offset_m.is_finite() && (0.0..first_len).contains(&offset_m)) {
            return Err(SimError::Config(format!(
                "start offset {offset_m} m outside segment {start_segment:?} of length {first_len:.3} m"
            )));
        }

        let mut segments = vec![first];
        let mut seen = vec![false; map.segments().len()];
        seen[first] = true;
        let mut cur = first;
        loop {
            let heading = map.segments()[cur].heading_deg;
            let next = map.downstream_of(cur).iter().copied().filter(|&s| !seen[s]).min_by(|&a, &b| {
                let sa = &map.segments()[a];
                let sb = &map.segments()[b];
                map.next_signal(b)
                    .is_some()
                    .cmp(&map.next_signal(a).is_some())
                    .then(heading_difference(heading, sa.heading_deg).total_cmp(&heading_difference(heading, sb.heading_deg)))
                    .then_with(|| sa.id.cmp(&sb.id))
            });
            match next {
                Some(n) => {
                    seen[n] = true;
                    segments.push(n);
                    cur = n;
                }
                None => break,
            }
        }

        let mut starts = Vec::with_capacity(segments.len());
        let mut ends = Vec::with_capacity(segments.len());
        let mut headings = Vec::with_capacity(segments.len());
        let mut speed_limits = Vec::with_capacity(segments.len());
        let mut signals = Vec::new();
        let mut acc = 0.0;
        for &s in &segments {
            let seg = &map.segments()[s];
            let (a, b) = map.segment_endpoints(s);
            starts.push(acc);
            ends.push((a, b));
            headings.push(bearing_deg(a, b));
            speed_limits.push(seg.speed_limit_mps);
            acc += seg.length_m;
            if let Some(sig) = map.signals().iter().find(|n| n.node_id == seg.to) {
                signals.push((acc, SignalRef::from(sig)));
            }
        }
        Ok(Route {
            segments,
            starts,
            ends,
            headings,
            speed_limits,
            signals,
            start_offset_m: offset_m,
            length_m: acc,
        })
    }

    /// Distance from the start position to the end of the chain.
    pub fn length_m(&self) -> f64 {
        self.length_m - self.start_offset_m
    }

    pub fn segment_indices(&self) -> &[usize] {
        &self.segments
    }

    fn locate(&self, odometer_m: f64) -> (usize, f64) {
        let s = self.start_offset_m + odometer_m;
        let k = self.starts.partition_point(|&st| st <= s).saturating_sub(1);
        (k, s - self.starts[k])
    }

    /// Position and travel heading after `odometer_m` meters. Past the end
    /// of the chain the truck continues straight along the last segment.
    pub fn pose(&self, odometer_m: f64) -> (GeoPoint, f64) {
        let (k, along) = self.locate(odometer_m);
        let (a, b) = self.ends[k];
        let len = self.segment_length(k);
        let heading = self.headings[k];
        if along <= len {
            (a.lerp(&b, along / len), heading)
        } else {
            let [e, n] = crate::geo::heading_unit(heading);
            let over = along - len;
            (b.offset(e * over, n * over), heading)
        }
    }

    fn segment_length(&self, k: usize) -> f64 {
        match self.starts.get(k + 1) {
            Some(next) => next - self.starts[k],
            None => self.length_m - self.starts[k],
        }
    }

    pub fn speed_limit(&self, odometer_m: f64) -> f64 {
        self.speed_limits[self.locate(odometer_m).0]
    }

    /// The first stop line strictly ahead, with the distance to it.
    pub fn next_signal(&self, odometer_m: f64) -> Option<(SignalRef, f64)> {
        let s = self.start_offset_m + odometer_m;
        self.signals
            .iter()
            .find(|(at, _)| *at > s)
            .map(|&(at, sig)| (sig, at - s))
    }

    /// Odometer readings at which each stop line is reached.
    pub fn signal_odometers(&self) -> Vec<(f64, SignalRef)> {
        self.signals
            .iter()
            .map(|&(at, sig)| (at - self.start_offset_m, sig))
            .collect()
    }
}
