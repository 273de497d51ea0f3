use std::collections::BTreeMap;

use super::{NodeId, SimError, SimTime};

/// Free-running node oscillator with constant drift, corrected by sync.
///
/// `local_time(t) = t + offset_us + drift_ppm * 1e-6 * (t - last_sync)`
#[derive(Debug, Clone, PartialEq)]
pub struct NodeClock {
    pub owner: NodeId,
    pub drift_ppm: f64,
    pub offset_us: f64,
    pub last_sync: SimTime,
}

impl NodeClock {
    pub fn new(owner: NodeId, drift_ppm: f64) -> Self {
        Self {
            owner,
            drift_ppm,
            offset_us: 0.0,
            last_sync: 0,
        }
    }

    pub fn local_time(&self, true_time: SimTime) -> f64 {
        let since = true_time as f64 - self.last_sync as f64;
        true_time as f64 + self.offset_us + self.drift_ppm * 1e-6 * since
    }

    /// Error of the local clock against true time.
    pub fn error_us(&self, true_time: SimTime) -> f64 {
        self.local_time(true_time) - true_time as f64
    }

    /// Re-anchors the clock so that at `now` it reads `target_local`.
    pub fn correct_to(&mut self, now: SimTime, target_local: f64) {
        self.offset_us = target_local - now as f64;
        self.last_sync = now;
    }
}

/// Clocks of every node in a run, iterated in id order.
#[derive(Debug, Clone, Default)]
pub struct ClockSet {
    clocks: BTreeMap<NodeId, NodeClock>,
}

impl ClockSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clock: NodeClock) {
        self.clocks.insert(clock.owner, clock);
    }

    pub fn get(&self, node: NodeId) -> Result<&NodeClock, SimError> {
        self.clocks.get(&node).ok_or(SimError::UnknownNode(node))
    }

    pub fn get_mut(&mut self, node: NodeId) -> Result<&mut NodeClock, SimError> {
        self.clocks.get_mut(&node).ok_or(SimError::UnknownNode(node))
    }

    pub fn local_time(&self, node: NodeId, true_time: SimTime) -> Result<f64, SimError> {
        Ok(self.get(node)?.local_time(true_time))
    }
}
