//! Flooding time synchronization. The originator's beacon is re-broadcast
//! in waves: every node that first hears the beacon in wave `k` relays the
//! identical frame in wave `k + 1`, up to `max_waves`.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::frame::Frame;
use crate::channel::{Channel, ChannelError, Transmission};
use crate::sim::{ClockSet, NodeId, Purpose, RngStream, SimError, SimTime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyncParams {
    pub max_waves: u8,
    /// Residual alignment error added per hop wave, uniform in `±jitter_us`.
    pub jitter_us: f64,
    /// Consecutive missed beacons after which a node stops transmitting.
    pub desync_after: u32,
    pub max_drift_ppm: f64,
}

impl Default for SyncParams {
    fn default() -> Self {
        Self {
            max_waves: 2,
            jitter_us: 10.0,
            desync_after: 3,
            max_drift_ppm: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncState {
    pub node: NodeId,
    pub synced: bool,
    pub missed_beacons: u32,
    pub last_correction_us: f64,
}

impl SyncState {
    pub fn new(node: NodeId) -> Self {
        Self {
            node,
            synced: false,
            missed_beacons: 0,
            last_correction_us: 0.0,
        }
    }

    pub fn on_beacon(&mut self, residual_us: f64) {
        self.synced = true;
        self.missed_beacons = 0;
        self.last_correction_us = residual_us;
    }

    pub fn on_miss(&mut self, desync_after: u32) {
        self.missed_beacons = self.missed_beacons.saturating_add(1);
        if self.missed_beacons >= desync_after {
            self.synced = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncReception {
    pub node: NodeId,
    pub wave: u8,
    pub residual_us: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SyncReport {
    /// Transmissions of each wave, wave 1 first.
    pub waves: Vec<Vec<Transmission>>,
    pub received: Vec<SyncReception>,
    pub missed: Vec<NodeId>,
}

/// Everything a beacon flood touches.
pub struct SyncContext<'a> {
    pub channel: &'a mut Channel,
    pub clocks: &'a mut ClockSet,
    pub states: &'a mut BTreeMap<NodeId, SyncState>,
    pub jitter: &'a mut BTreeMap<NodeId, RngStream>,
    pub master_seed: u64,
}

/// Runs one beacon flood. `blocked(node)` forces the node to hear nothing
/// (used to inject beacon blackouts).
#[allow(clippy::too_many_arguments)]
pub fn run_sync_beacon(
    ctx: SyncContext<'_>,
    params: &SyncParams,
    originator: NodeId,
    cycle_index: u64,
    slot: u64,
    channel: u8,
    start: SimTime,
    airtime_us: u64,
    blocked: &dyn Fn(NodeId) -> bool,
) -> Result<SyncReport, SyncError> {
    let SyncContext {
        channel: medium,
        clocks,
        states,
        jitter,
        master_seed,
    } = ctx;
    let mut report = SyncReport::default();
    let mut residual: BTreeMap<NodeId, f64> = BTreeMap::new();
    residual.insert(originator, 0.0);
    let mut transmitters = vec![originator];
    let listeners: BTreeSet<NodeId> = states.keys().copied().filter(|&n| n != originator).collect();

    for wave in 1..=params.max_waves {
        if transmitters.is_empty() {
            break;
        }
        let at = start + u64::from(wave - 1) * airtime_us;
        let frame = Frame::Sync {
            src: originator,
            seq: cycle_index as u16,
            cycle_index: cycle_index as u32,
            wave,
        };
        let txs: Vec<Transmission> = transmitters
            .iter()
            .map(|&sender| Transmission {
                sender,
                frame,
                slot,
                channel,
                start: at,
                airtime_us,
            })
            .collect();
        let base = transmitters.iter().map(|n| residual[n]).sum::<f64>() / transmitters.len() as f64;
        let mut next = Vec::new();
        let pending: Vec<NodeId> = listeners.iter().copied().filter(|n| !residual.contains_key(n)).collect();
        for node in pending {
            if blocked(node) {
                continue;
            }
            let outcome = if txs.len() == 1 {
                medium.deliver(&txs[0], node)?
            } else {
                medium.deliver_flood(&txs, node)?
            };
            if outcome.received {
                let stream = jitter
                    .entry(node)
                    .or_insert_with(|| RngStream::new(master_seed, node, Purpose::Sync));
                let j = params.jitter_us;
                let draw = if j > 0.0 { stream.rng().gen_range(-j..=j) } else { 0.0 };
                let r = base + draw;
                residual.insert(node, r);
                next.push(node);
                report.received.push(SyncReception {
                    node,
                    wave,
                    residual_us: r,
                });
            }
        }
        report.waves.push(txs);
        transmitters = next;
    }

    let origin_clock = clocks.get(originator)?.clone();
    let now = start;
    for (&node, state) in states.iter_mut() {
        if node == originator {
            state.on_beacon(0.0);
            continue;
        }
        match residual.get(&node) {
            Some(&r) => {
                state.on_beacon(r);
                let target = origin_clock.local_time(now) + r;
                clocks.get_mut(node)?.correct_to(now, target);
            }
            None => {
                state.on_miss(params.desync_after);
                report.missed.push(node);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SyncError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
