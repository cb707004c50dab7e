//! Connected-intersection emulation: fixed-time controllers, the SPaT wire
//! format, a fan-out broker, and a subscriber behind a lossy, delayed link.

mod broker;
mod channel;
mod plan;
mod subscriber;

pub use broker::{serve, Broker, BrokerOptions, ServeHandle, SubscriberStats};
pub use channel::{ChannelModel, Delivered, LossyChannel};
pub use plan::{broadcast_tick, controller_state, Controller, PhaseColor, PhasePlan};
pub use subscriber::{SpatSubscriber, SubscriberPoll};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpatError {
    #[error("invalid phase plan: {0}")]
    InvalidPlan(String),
    #[error("invalid channel model: {0}")]
    InvalidChannel(String),
    #[error("malformed SPaT line: {0}")]
    Malformed(String),
    #[error("failed to bind {endpoint}: {source}")]
    Bind {
        endpoint: String,
        source: std::io::Error,
    },
    #[error("failed to connect to {endpoint}: {source}")]
    Connect {
        endpoint: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Current phase and residual time of one signal group.
///
/// On the wire each message is one line of JSON carrying exactly these
/// fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatMessage {
    pub intersection_id: u32,
    pub signal_group_id: u32,
    pub phase: PhaseColor,
    /// Whole seconds left in the current phase (floored).
    pub time_remaining_s: u32,
    /// Send time in milliseconds since scenario start.
    pub timestamp_ms: u64,
}

impl SpatMessage {
    pub fn signal(&self) -> crate::geo::SignalRef {
        crate::geo::SignalRef {
            intersection_id: self.intersection_id,
            signal_group_id: self.signal_group_id,
        }
    }

    /// Newline-terminated wire encoding.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("SpatMessage always serializes");
        s.push('\n');
        s
    }

    pub fn from_line(line: &str) -> Result<Self, SpatError> {
        serde_json::from_str(line.trim_end()).map_err(|e| SpatError::Malformed(e.to_string()))
    }
}

/// Encodes a batch as consecutive wire lines.
pub fn encode_batch(batch: &[SpatMessage]) -> Vec<u8> {
    batch.iter().flat_map(|m| m.to_line().into_bytes()).collect()
}
