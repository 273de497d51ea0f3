//! In-cycle retransmission. A frame first goes out in its owner's slot;
//! while the destination still lacks it, every shared retransmission slot
//! is a concurrent flood by all nodes already holding it (origin, relays
//! and anyone who overheard).

use std::collections::BTreeSet;

use super::frame::Frame;
use crate::channel::{Cause, Channel, ChannelError, ReceptionOutcome, Transmission};
use crate::sim::{NodeId, SimTime};

/// Where and when a transmission attempt happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRef {
    pub slot: u64,
    pub channel: u8,
    pub start: SimTime,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlotAttempt {
    pub transmissions: Vec<Transmission>,
    pub outcomes: Vec<ReceptionOutcome>,
}

/// One frame in flight during a cycle.
#[derive(Debug, Clone)]
pub struct PendingFrame {
    pub frame: Frame,
    pub targets: BTreeSet<NodeId>,
    pub relays: BTreeSet<NodeId>,
    pub holders: BTreeSet<NodeId>,
}

impl PendingFrame {
    pub fn new(
        frame: Frame,
        origin: NodeId,
        targets: impl IntoIterator<Item = NodeId>,
        relays: impl IntoIterator<Item = NodeId>,
    ) -> Self {
        Self {
            frame,
            targets: targets.into_iter().collect(),
            relays: relays.into_iter().collect(),
            holders: BTreeSet::from([origin]),
        }
    }

    pub fn has(&self, node: NodeId) -> bool {
        self.holders.contains(&node)
    }

    /// True while some target still lacks the frame.
    pub fn outstanding(&self) -> bool {
        self.targets.iter().any(|t| !self.holders.contains(t))
    }

    /// One slot of transmission by every eligible holder towards every
    /// listener that lacks the frame. `listener_block` returns a cause when
    /// a listener cannot receive in this slot at all.
    pub fn attempt(
        &mut self,
        channel: &mut Channel,
        at: SlotRef,
        airtime_us: u64,
        can_transmit: &dyn Fn(NodeId) -> bool,
        listener_block: &dyn Fn(NodeId) -> Option<Cause>,
    ) -> Result<SlotAttempt, ChannelError> {
        let transmissions: Vec<Transmission> = self
            .holders
            .iter()
            .copied()
            .filter(|&n| can_transmit(n))
            .map(|sender| Transmission {
                sender,
                frame: self.frame,
                slot: at.slot,
                channel: at.channel,
                start: at.start,
                airtime_us,
            })
            .collect();
        let listeners: Vec<NodeId> = self
            .targets
            .union(&self.relays)
            .copied()
            .filter(|n| !self.holders.contains(n))
            .collect();
        let mut outcomes = Vec::with_capacity(listeners.len());
        for node in listeners {
            let outcome = if let Some(cause) = listener_block(node) {
                ReceptionOutcome::new(node, cause)
            } else if transmissions.is_empty() {
                ReceptionOutcome::new(node, Cause::NoTransmitter)
            } else if transmissions.len() == 1 {
                channel.deliver(&transmissions[0], node)?
            } else {
                channel.deliver_flood(&transmissions, node)?
            };
            outcomes.push(outcome);
        }
        for o in &outcomes {
            if o.received {
                self.holders.insert(o.receiver);
            }
        }
        Ok(SlotAttempt {
            transmissions,
            outcomes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetxReport {
    pub delivered: bool,
    /// Slots used, counting the primary attempt.
    pub attempts: u32,
    /// From primary slot start to the end of the successful airtime.
    pub latency_us: Option<u64>,
}

/// Sends `frame` from `origin` to `destination` in the owner slot, then
/// floods it in up to `retx.len()` retransmission slots until delivered.
#[allow(clippy::too_many_arguments)]
pub fn transmit_with_retx(
    channel: &mut Channel,
    frame: Frame,
    origin: NodeId,
    destination: NodeId,
    relays: &[NodeId],
    primary: SlotRef,
    retx: &[SlotRef],
    airtime_us: u64,
) -> Result<RetxReport, ChannelError> {
    let mut pending = PendingFrame::new(frame, origin, [destination], relays.iter().copied());
    let all = std::iter::once(primary).chain(retx.iter().copied());
    for (i, at) in all.enumerate() {
        pending.attempt(channel, at, airtime_us, &|_| true, &|_| None)?;
        if pending.has(destination) {
            return Ok(RetxReport {
                delivered: true,
                attempts: i as u32 + 1,
                latency_us: Some(at.start - primary.start + airtime_us),
            });
        }
    }
    Ok(RetxReport {
        delivered: false,
        attempts: retx.len() as u32 + 1,
        latency_us: None,
    })
}
