use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{SpatError, SpatMessage};
use crate::geo::SignalRef;

/// Cellular link model between the cloud broker and the truck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelModel {
    #[serde(default = "ChannelModel::default_latency")]
    pub latency_ms: u64,
    #[serde(default)]
    pub jitter_ms: u64,
    #[serde(default, rename = "drop")]
    pub drop_probability: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            latency_ms: Self::default_latency(),
            jitter_ms: 0,
            drop_probability: 0.0,
        }
    }
}

impl ChannelModel {
    fn default_latency() -> u64 {
        100
    }

    pub fn ideal() -> Self {
        ChannelModel {
            latency_ms: 0,
            jitter_ms: 0,
            drop_probability: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SpatError> {
        if !(0.0..1.0).contains(&self.drop_probability) {
            return Err(SpatError::InvalidChannel(format!(
                "drop probability must be in [0, 1), got {}",
                self.drop_probability
            )));
        }
        Ok(())
    }
}

/// A message released by the channel, stamped with its arrival time and a
/// per-channel sequence number assigned at send.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivered {
    pub message: SpatMessage,
    pub arrival_ms: u64,
    pub seq: u64,
}

/// Applies latency, jitter, and independent loss to a SPaT stream.
///
/// Arrival times never reorder messages of the same signal group. All
/// randomness comes from the seed, so a replay with the same seed and the
/// same input yields the same deliveries.
#[derive(Debug)]
pub struct LossyChannel {
    model: ChannelModel,
    rng: ChaCha8Rng,
    pending: BinaryHeap<Reverse<(u64, u64)>>,
    in_flight: HashMap<u64, SpatMessage>,
    last_arrival: HashMap<SignalRef, u64>,
    next_seq: u64,
    sent: u64,
    dropped: u64,
    last_sent_ms: Option<u64>,
}

impl LossyChannel {
    pub fn new(model: ChannelModel, seed: u64) -> Result<Self, SpatError> {
        model.validate()?;
        Ok(LossyChannel {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            pending: BinaryHeap::new(),
            in_flight: HashMap::new(),
            last_arrival: HashMap::new(),
            next_seq: 0,
            sent: 0,
            dropped: 0,
            last_sent_ms: None,
        })
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// Offers a message sent at its own timestamp.
    pub fn send(&mut self, message: SpatMessage) {
        // both draws happen for every message so the random stream does not
        // depend on earlier outcomes
        let u: f64 = self.rng.random();
        let j = self.model.jitter_ms as i64;
        let jitter = if j > 0 { self.rng.random_range(-j..=j) } else { 0 };
        self.sent += 1;
        self.last_sent_ms = self.last_sent_ms.max(Some(message.timestamp_ms));
        if u < self.model.drop_probability {
            self.dropped += 1;
            return;
        }
        let nominal = message.timestamp_ms as i64 + self.model.latency_ms as i64 + jitter;
        let mut arrival = nominal.max(message.timestamp_ms as i64) as u64;
        let last = self.last_arrival.entry(message.signal()).or_insert(0);
        arrival = arrival.max(*last);
        *last = arrival;
        let seq = self.next_seq;
        self.next_seq += 1;
        self.in_flight.insert(seq, message);
        self.pending.push(Reverse((arrival, seq)));
    }

    /// Releases every message whose arrival time is at or before `now_ms`, in
    /// (arrival, seq) order.
    pub fn poll(&mut self, now_ms: u64) -> Vec<Delivered> {
        let mut out = Vec::new();
        while let Some(&Reverse((arrival, seq))) = self.pending.peek() {
            if arrival > now_ms {
                break;
            }
            self.pending.pop();
            let message = self.in_flight.remove(&seq).expect("pending entries are in flight");
            out.push(Delivered {
                message,
                arrival_ms: arrival,
                seq,
            });
        }
        out
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    pub fn sent(&self) -> u64 {
        self.sent
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Newest send timestamp offered so far, dropped messages included.
    pub fn last_sent_ms(&self) -> Option<u64> {
        self.last_sent_ms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spat::PhaseColor;

    fn msg(group: u32, t_ms: u64) -> SpatMessage {
        SpatMessage {
            intersection_id: 1,
            signal_group_id: group,
            phase: PhaseColor::Red,
            time_remaining_s: 10,
            timestamp_ms: t_ms,
        }
    }

    #[test]
    fn fixed_latency_delays_delivery() {
        let mut ch = LossyChannel::new(ChannelModel::default(), 1).unwrap();
        ch.send(msg(2, 5000));
        assert!(ch.poll(5099).is_empty());
        let d = ch.poll(5100);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].arrival_ms, 5100);
    }

    #[test]
    fn identity_channel() {
        let mut ch = LossyChannel::new(ChannelModel::ideal(), 1).unwrap();
        ch.send(msg(2, 7000));
        assert_eq!(ch.poll(7000)[0].arrival_ms, 7000);
    }

    #[test]
    fn drop_fraction_is_close_to_probability() {
        let model = ChannelModel {
            latency_ms: 0,
            jitter_ms: 0,
            drop_probability: 0.5,
        };
        let mut ch = LossyChannel::new(model, 42).unwrap();
        for k in 0..10_000 {
            ch.send(msg(2, k * 1000));
        }
        let delivered = ch.poll(u64::MAX).len() as f64 / 10_000.0;
        // four standard deviations of a binomial(10000, 0.5) fraction is 0.02
        assert!((delivered - 0.5).abs() <= 0.02, "{delivered}");
    }

    #[test]
    fn jitter_never_reorders_a_group() {
        let model = ChannelModel {
            latency_ms: 100,
            jitter_ms: 900,
            drop_probability: 0.0,
        };
        let mut ch = LossyChannel::new(model, 3).unwrap();
        for k in 0..500 {
            ch.send(msg(2, k * 100));
            ch.send(msg(6, k * 100));
        }
        let out = ch.poll(u64::MAX);
        for g in [2, 6] {
            let ts: Vec<u64> = out
                .iter()
                .filter(|d| d.message.signal_group_id == g)
                .map(|d| d.message.timestamp_ms)
                .collect();
            assert!(ts.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn invalid_drop_probability() {
        let model = ChannelModel {
            latency_ms: 0,
            jitter_ms: 0,
            drop_probability: 1.0,
        };
        assert!(LossyChannel::new(model, 0).is_err());
    }
}
