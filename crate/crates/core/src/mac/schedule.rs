use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sync::SyncParams;
use crate::channel::PhyParams;
use crate::sim::{NodeId, Purpose, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConstants {
    pub slot_duration_us: u64,
    pub compute_gap_us: u64,
    pub retx_slots: usize,
    /// Channels per FDD band; the hop sequence is a permutation of these.
    pub hop_channels: usize,
    pub sync: SyncParams,
    pub watchdog_cycles: u32,
    pub phy: PhyParams,
}

impl Default for ProtocolConstants {
    fn default() -> Self {
        Self {
            slot_duration_us: 250,
            compute_gap_us: 500,
            retx_slots: 2,
            hop_channels: 8,
            sync: SyncParams::default(),
            watchdog_cycles: 10,
            phy: PhyParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sync,
    Uplink,
    Compute,
    Downlink,
    Retx,
}

/// FDD band. Forward carries controller-originated traffic, feedback carries
/// robot reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Forward,
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotOwner {
    Node(NodeId),
    Flood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub position: usize,
    pub owner: SlotOwner,
    pub direction: Direction,
    pub band: Band,
    /// Logical hop channel within the band.
    pub channel: u8,
    pub loop_id: Option<u16>,
}

impl Slot {
    /// Physical channel number: forward band first, feedback band above it.
    pub fn physical_channel(&self, hop_channels: usize) -> u16 {
        match self.band {
            Band::Forward => u16::from(self.channel),
            Band::Feedback => hop_channels as u16 + u16::from(self.channel),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub id: u16,
    pub controller: NodeId,
    pub plant: NodeId,
    #[serde(default)]
    pub relays: Vec<NodeId>,
}

/// Fixed permutation of the logical channels of one band.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopSequence(Vec<u8>);

impl HopSequence {
    pub fn identity(channels: usize) -> Self {
        Self((0..channels as u8).collect())
    }

    pub fn seeded(channels: usize, master_seed: u64, originator: NodeId) -> Self {
        let mut seq: Vec<u8> = (0..channels as u8).collect();
        let mut stream = RngStream::new(master_seed, originator, Purpose::Hop);
        seq.shuffle(stream.rng());
        Self(seq)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn channels(&self) -> &[u8] {
        &self.0
    }

    pub fn channel_at(&self, cycle_index: u64, position: usize) -> u8 {
        let len = self.0.len() as u64;
        self.0[((cycle_index % len + position as u64 % len) % len) as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleSchedule {
    pub cycle_index: u64,
    pub slots: Vec<Slot>,
    pub cycle_length_us: u64,
    pub slot_duration_us: u64,
    pub compute_gap_us: u64,
    hop: HopSequence,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("at least one control loop is required")]
    NoLoops,
    #[error("loop id {0} appears twice")]
    DuplicateLoop(u16),
    #[error("node {0} would own more than one feedback slot")]
    DuplicateOwner(NodeId),
    #[error("loop {0}: controller and plant are the same node")]
    ControllerIsPlant(u16),
    #[error("loop {0}: relay overlaps controller or plant, or is repeated")]
    BadRelay(u16),
    #[error("all loops must share one controller")]
    MultipleControllers,
    #[error("hop sequence is empty")]
    EmptyHopSequence,
}

impl CycleSchedule {
    pub fn hop_sequence(&self) -> &HopSequence {
        &self.hop
    }

    pub fn compute_position(&self) -> usize {
        self.slots
            .iter()
            .position(|s| s.direction == Direction::Compute)
            .expect("schedule always has a compute slot")
    }

    /// Start of a slot relative to cycle start. Slots after the compute
    /// slot are shifted by the compute gap.
    pub fn slot_offset_us(&self, position: usize) -> u64 {
        let base = position as u64 * self.slot_duration_us;
        if position > self.compute_position() {
            base + self.compute_gap_us
        } else {
            base
        }
    }

    /// The same layout with channels re-derived for another cycle.
    pub fn for_cycle(&self, cycle_index: u64) -> CycleSchedule {
        let mut next = self.clone();
        next.cycle_index = cycle_index;
        for slot in &mut next.slots {
            slot.channel = self.hop.channel_at(cycle_index, slot.position);
        }
        next
    }

    pub fn uplink_slot(&self, loop_id: u16) -> Option<&Slot> {
        self.slots
            .iter()
            .find(|s| s.direction == Direction::Uplink && s.loop_id == Some(loop_id))
    }

    pub fn downlink_slot(&self, loop_id: u16) -> Option<&Slot> {
        self.slots
            .iter()
            .find(|s| s.direction == Direction::Downlink && s.loop_id == Some(loop_id))
    }

    pub fn retx_slots(&self) -> impl Iterator<Item = &Slot> {
        self.slots.iter().filter(|s| s.direction == Direction::Retx)
    }
}

fn validate(loops: &[LoopSpec]) -> Result<NodeId, ScheduleError> {
    let first = loops.first().ok_or(ScheduleError::NoLoops)?;
    let mut ids = BTreeSet::new();
    let mut plants = BTreeSet::new();
    for l in loops {
        if !ids.insert(l.id) {
            return Err(ScheduleError::DuplicateLoop(l.id));
        }
        if l.controller != first.controller {
            return Err(ScheduleError::MultipleControllers);
        }
        if l.controller == l.plant {
            return Err(ScheduleError::ControllerIsPlant(l.id));
        }
        if !plants.insert(l.plant) {
            return Err(ScheduleError::DuplicateOwner(l.plant));
        }
        let mut relays = BTreeSet::new();
        for &r in &l.relays {
            if r == l.controller || r == l.plant || !relays.insert(r) {
                return Err(ScheduleError::BadRelay(l.id));
            }
        }
    }
    Ok(first.controller)
}

/// Builds the cycle layout (at cycle 0) for a set of control loops.
pub fn build_schedule(
    loops: &[LoopSpec],
    constants: &ProtocolConstants,
    hop: &HopSequence,
) -> Result<CycleSchedule, ScheduleError> {
    let controller = validate(loops)?;
    if hop.is_empty() {
        return Err(ScheduleError::EmptyHopSequence);
    }
    let mut ordered: Vec<&LoopSpec> = loops.iter().collect();
    ordered.sort_by_key(|l| l.id);

    let mut layout: Vec<(SlotOwner, Direction, Band, Option<u16>)> = Vec::new();
    layout.push((SlotOwner::Flood, Direction::Sync, Band::Forward, None));
    for l in &ordered {
        layout.push((SlotOwner::Node(l.plant), Direction::Uplink, Band::Feedback, Some(l.id)));
    }
    layout.push((SlotOwner::Node(controller), Direction::Compute, Band::Forward, None));
    for l in &ordered {
        layout.push((
            SlotOwner::Node(l.controller),
            Direction::Downlink,
            Band::Forward,
            Some(l.id),
        ));
    }
    for _ in 0..constants.retx_slots {
        layout.push((SlotOwner::Flood, Direction::Retx, Band::Forward, None));
    }

    let slots: Vec<Slot> = layout
        .into_iter()
        .enumerate()
        .map(|(position, (owner, direction, band, loop_id))| Slot {
            position,
            owner,
            direction,
            band,
            channel: hop.channel_at(0, position),
            loop_id,
        })
        .collect();
    let cycle_length_us = cycle_length(slots.len(), constants.slot_duration_us, constants.compute_gap_us);
    Ok(CycleSchedule {
        cycle_index: 0,
        slots,
        cycle_length_us,
        slot_duration_us: constants.slot_duration_us,
        compute_gap_us: constants.compute_gap_us,
        hop: hop.clone(),
    })
}

pub fn cycle_length(slots: usize, slot_duration_us: u64, compute_gap_us: u64) -> u64 {
    slots as u64 * slot_duration_us + compute_gap_us
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loops(n: u16) -> Vec<LoopSpec> {
        (1..=n)
            .map(|i| LoopSpec {
                id: i,
                controller: 0,
                plant: i as NodeId,
                relays: vec![],
            })
            .collect()
    }

    fn directions(s: &CycleSchedule) -> Vec<Direction> {
        s.slots.iter().map(|s| s.direction).collect()
    }

    #[test]
    fn one_loop_layout() {
        let s = build_schedule(&loops(1), &ProtocolConstants::default(), &HopSequence::identity(8)).unwrap();
        use Direction::*;
        assert_eq!(directions(&s), vec![Sync, Uplink, Compute, Downlink, Retx, Retx]);
        assert_eq!(s.cycle_length_us, 2000);
    }

    #[test]
    fn two_loop_layout() {
        let s = build_schedule(&loops(2), &ProtocolConstants::default(), &HopSequence::identity(8)).unwrap();
        use Direction::*;
        assert_eq!(
            directions(&s),
            vec![Sync, Uplink, Uplink, Compute, Downlink, Downlink, Retx, Retx]
        );
        assert_eq!(s.cycle_length_us, 2500);
        assert_eq!(s.slots[1].owner, SlotOwner::Node(1));
        assert_eq!(s.slots[2].owner, SlotOwner::Node(2));
        assert_eq!(s.slots[1].band, Band::Feedback);
        assert_eq!(s.slots[4].band, Band::Forward);
    }

    #[test]
    fn no_loops_is_error() {
        assert_eq!(
            build_schedule(&[], &ProtocolConstants::default(), &HopSequence::identity(8)),
            Err(ScheduleError::NoLoops)
        );
    }

    #[test]
    fn malformed_loops_rejected() {
        let hop = HopSequence::identity(8);
        let c = ProtocolConstants::default();
        let mut l = loops(2);
        l[1].id = 1;
        assert_eq!(build_schedule(&l, &c, &hop), Err(ScheduleError::DuplicateLoop(1)));
        let mut l = loops(2);
        l[1].plant = 1;
        assert_eq!(build_schedule(&l, &c, &hop), Err(ScheduleError::DuplicateOwner(1)));
        let mut l = loops(1);
        l[0].plant = 0;
        assert_eq!(build_schedule(&l, &c, &hop), Err(ScheduleError::ControllerIsPlant(1)));
        let mut l = loops(1);
        l[0].relays = vec![1];
        assert_eq!(build_schedule(&l, &c, &hop), Err(ScheduleError::BadRelay(1)));
    }

    #[test]
    fn cycle_length_arithmetic() {
        assert_eq!(cycle_length(6, 250, 500), 2000);
        assert_eq!(cycle_length(8, 250, 500), 2500);
        assert_eq!(cycle_length(1, 250, 0), 250);
    }

    #[test]
    fn slot_offsets_skip_compute_gap() {
        let s = build_schedule(&loops(1), &ProtocolConstants::default(), &HopSequence::identity(8)).unwrap();
        let offsets: Vec<u64> = (0..s.slots.len()).map(|p| s.slot_offset_us(p)).collect();
        assert_eq!(offsets, vec![0, 250, 500, 1250, 1500, 1750]);
    }

    #[test]
    fn channels_follow_hop_sequence() {
        let hop = HopSequence::seeded(8, 42, 0);
        let base = build_schedule(&loops(2), &ProtocolConstants::default(), &hop).unwrap();
        let c5 = base.for_cycle(5);
        for slot in &c5.slots {
            assert_eq!(slot.channel, hop.channels()[(5 + slot.position) % 8]);
        }
    }

    #[test]
    fn seeded_hop_is_permutation() {
        let hop = HopSequence::seeded(8, 7, 0);
        let mut sorted = hop.channels().to_vec();
        sorted.sort();
        assert_eq!(sorted, (0..8).collect::<Vec<u8>>());
        assert_eq!(hop, HopSequence::seeded(8, 7, 0));
    }
}
