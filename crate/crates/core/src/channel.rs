//! Packet-erasure model of the shared 2.4 GHz medium.
//!
//! Each directed link has one erasure probability per hop channel, or an
//! optional two-state (Gilbert-Elliott) burst process that replaces the
//! static values. Concurrent transmissions of one frame are received when
//! any of the contributing links succeeds (independent-link approximation
//! of constructive interference).

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mac::frame::Frame;
use crate::sim::{NodeId, Purpose, RngStream, SimTime};

/// PHY constants. Only payload, overhead and rate enter the airtime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhyParams {
    pub payload_bytes: u32,
    pub overhead_bytes: u32,
    pub rate_mbps: f64,
    /// Informational; the erasure model does not use it.
    pub tx_power_dbm: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        Self {
            payload_bytes: 16,
            overhead_bytes: 10,
            rate_mbps: 2.0,
            tx_power_dbm: 8.0,
        }
    }
}

impl PhyParams {
    pub fn airtime_us(&self) -> u64 {
        let bits = f64::from((self.payload_bytes + self.overhead_bytes) * 8);
        (bits / self.rate_mbps).ceil() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurstModel {
    pub p_good_to_bad: f64,
    pub p_bad_to_good: f64,
    pub per_good: f64,
    pub per_bad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioLinkModel {
    pub from: NodeId,
    pub to: NodeId,
    pub per_channel_per: Vec<f64>,
    pub burst: Option<BurstModel>,
}

impl RadioLinkModel {
    pub fn uniform(from: NodeId, to: NodeId, per: f64, channels: usize) -> Self {
        Self {
            from,
            to,
            per_channel_per: vec![per; channels],
            burst: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transmission {
    pub sender: NodeId,
    pub frame: Frame,
    /// Global slot counter since run start.
    pub slot: u64,
    /// Logical hop channel index (indexes `per_channel_per`).
    pub channel: u8,
    pub start: SimTime,
    pub airtime_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    Delivered,
    Erased,
    NoTransmitter,
    DesyncedListener,
}

impl Cause {
    pub fn as_str(self) -> &'static str {
        match self {
            Cause::Delivered => "delivered",
            Cause::Erased => "erased",
            Cause::NoTransmitter => "no-transmitter",
            Cause::DesyncedListener => "desynced-listener",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReceptionOutcome {
    pub receiver: NodeId,
    pub received: bool,
    pub cause: Cause,
}

impl ReceptionOutcome {
    pub fn new(receiver: NodeId, cause: Cause) -> Self {
        Self {
            receiver,
            received: cause == Cause::Delivered,
            cause,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("no link model for {0} -> {1}")]
    MissingLink(NodeId, NodeId),
    #[error("link {from}->{to}: {reason}")]
    InvalidLink {
        from: NodeId,
        to: NodeId,
        reason: String,
    },
    #[error("flood transmissions must carry identical frames on one slot and channel")]
    FloodMismatch,
    #[error("flood with no transmitters")]
    EmptyFlood,
}

#[derive(Debug, Clone)]
struct LinkState {
    model: RadioLinkModel,
    bad: bool,
    last_slot: Option<u64>,
}

/// Owner of all link models, their burst states, and the per-receiver
/// `channel` random streams.
#[derive(Debug)]
pub struct Channel {
    master_seed: u64,
    channel_count: usize,
    links: BTreeMap<(NodeId, NodeId), LinkState>,
    streams: BTreeMap<NodeId, RngStream>,
}

fn check_prob(p: f64) -> bool {
    (0.0..=1.0).contains(&p)
}

impl Channel {
    pub fn new(
        master_seed: u64,
        channel_count: usize,
        models: impl IntoIterator<Item = RadioLinkModel>,
    ) -> Result<Self, ChannelError> {
        let mut links = BTreeMap::new();
        for model in models {
            let invalid = |reason: String| ChannelError::InvalidLink {
                from: model.from,
                to: model.to,
                reason,
            };
            if model.per_channel_per.len() != channel_count {
                return Err(invalid(format!(
                    "expected {channel_count} per-channel values, got {}",
                    model.per_channel_per.len()
                )));
            }
            if !model.per_channel_per.iter().all(|&p| check_prob(p)) {
                return Err(invalid("erasure probability outside [0, 1]".into()));
            }
            if let Some(b) = &model.burst {
                if ![b.p_good_to_bad, b.p_bad_to_good, b.per_good, b.per_bad]
                    .iter()
                    .all(|&p| check_prob(p))
                {
                    return Err(invalid("burst probability outside [0, 1]".into()));
                }
            }
            links.insert(
                (model.from, model.to),
                LinkState {
                    model,
                    bad: false,
                    last_slot: None,
                },
            );
        }
        Ok(Self {
            master_seed,
            channel_count,
            links,
            streams: BTreeMap::new(),
        })
    }

    pub fn channel_count(&self) -> usize {
        self.channel_count
    }

    pub fn has_link(&self, from: NodeId, to: NodeId) -> bool {
        self.links.contains_key(&(from, to))
    }

    /// Static erasure probability of a link on a channel (burst links report
    /// the value of their current state).
    pub fn per(&self, from: NodeId, to: NodeId, channel: u8) -> Result<f64, ChannelError> {
        let link = self
            .links
            .get(&(from, to))
            .ok_or(ChannelError::MissingLink(from, to))?;
        Ok(match &link.model.burst {
            Some(b) if link.bad => b.per_bad,
            Some(b) => b.per_good,
            None => link.model.per_channel_per[usize::from(channel) % self.channel_count],
        })
    }

    /// Advances the link's burst state to `slot` and draws one erasure.
    fn draw_link(
        &mut self,
        from: NodeId,
        to: NodeId,
        channel: u8,
        slot: u64,
    ) -> Result<bool, ChannelError> {
        let seed = self.master_seed;
        let stream = self
            .streams
            .entry(to)
            .or_insert_with(|| RngStream::new(seed, to, Purpose::Channel));
        let link = self
            .links
            .get_mut(&(from, to))
            .ok_or(ChannelError::MissingLink(from, to))?;
        let per = match &link.model.burst {
            Some(b) => {
                let steps = match link.last_slot {
                    None => 1,
                    Some(last) => slot.saturating_sub(last),
                };
                for _ in 0..steps {
                    let flip = if link.bad { b.p_bad_to_good } else { b.p_good_to_bad };
                    if stream.rng().gen_bool(flip) {
                        link.bad = !link.bad;
                    }
                }
                if link.bad {
                    b.per_bad
                } else {
                    b.per_good
                }
            }
            None => link.model.per_channel_per[usize::from(channel) % self.channel_count],
        };
        link.last_slot = Some(slot);
        Ok(!stream.rng().gen_bool(per))
    }

    pub fn deliver(
        &mut self,
        tx: &Transmission,
        receiver: NodeId,
    ) -> Result<ReceptionOutcome, ChannelError> {
        let ok = self.draw_link(tx.sender, receiver, tx.channel, tx.slot)?;
        Ok(ReceptionOutcome::new(
            receiver,
            if ok { Cause::Delivered } else { Cause::Erased },
        ))
    }

    /// Reception of simultaneous identical transmissions. Every link is
    /// drawn (so burst states and streams advance the same way regardless
    /// of the outcome), and the frame is received if any link succeeds.
    pub fn deliver_flood(
        &mut self,
        txs: &[Transmission],
        receiver: NodeId,
    ) -> Result<ReceptionOutcome, ChannelError> {
        let first = txs.first().ok_or(ChannelError::EmptyFlood)?;
        if txs.iter().any(|t| {
            t.frame.encode() != first.frame.encode()
                || t.slot != first.slot
                || t.channel != first.channel
        }) {
            return Err(ChannelError::FloodMismatch);
        }
        let mut any = false;
        for tx in txs {
            any |= self.draw_link(tx.sender, receiver, tx.channel, tx.slot)?;
        }
        Ok(ReceptionOutcome::new(
            receiver,
            if any { Cause::Delivered } else { Cause::Erased },
        ))
    }
}

/// Closed-form flood success: `1 - prod(per_s)`.
pub fn flood_success_probability(pers: &[f64]) -> f64 {
    1.0 - pers.iter().product::<f64>()
}
