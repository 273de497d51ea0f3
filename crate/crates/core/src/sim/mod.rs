//! Discrete-event engine: virtual time, a replayable event queue, per-node
//! drifting clocks and independent seeded random streams.

mod clock;
mod queue;
mod rng;

pub use clock::{ClockSet, NodeClock};
pub use queue::{Engine, EventHandle, EventQueue, RunSummary};
pub use rng::{Purpose, RngStream};

use thiserror::Error;

/// Virtual time in microseconds since run start.
pub type SimTime = u64;

/// Node identifier. Fits the one-byte address fields of a frame.
pub type NodeId = u8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("event scheduled at {at} us but the clock already reads {now} us")]
    ScheduledInPast { at: SimTime, now: SimTime },
    #[error("no clock registered for node {0}")]
    UnknownNode(NodeId),
}
