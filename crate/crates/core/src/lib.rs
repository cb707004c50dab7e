//! Connected eco-driving for heavy trucks approaching signalized
//! intersections.
//!
//! The crate is organized the way the on-board system is:
//!
//! - [`geo`]: lane map, haversine geometry, and map matching to the next
//!   signal stop line.
//! - [`spat`]: fixed-time signal controllers, a 1 Hz SPaT broker, and a
//!   subscriber with injected latency, jitter, and loss.
//! - [`advisor`]: the recommended speed band and its 10 Hz loop, gated by
//!   time-to-collision with a preceding vehicle.
//! - [`sim`]: a deterministic point-mass truck, baseline and eco drivers,
//!   and scenario orchestration producing trajectory logs.
//! - [`energy`]: a road-load fuel-rate proxy for comparing runs.
//! - [`cli`]: the `ecodrive` command line.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod advisor;
pub mod cli;
pub mod energy;
pub mod fixtures;
pub mod geo;
pub mod sim;
pub mod spat;
