//! Wires config, MAC, channel, plants and controller into one event-driven
//! co-simulation run.

use std::collections::BTreeMap;

use rand::Rng;

use super::config::{Role, ScenarioConfig, ScenarioKind};
use super::metrics::{compute_metrics, MetricsReport};
use super::trace::{Trace, TraceEvent, TraceRow};
use crate::channel::{Cause, Channel, ChannelError};
use crate::control::{FeedbackSample, FollowerQueue, Guidance, PathController, ReferencePath};
use crate::geometry::{Point, Segment};
use crate::mac::frame::{Frame, BROADCAST};
use crate::mac::retx::{PendingFrame, SlotAttempt, SlotRef};
use crate::mac::schedule::{build_schedule, CycleSchedule, Direction, HopSequence, LoopSpec, ScheduleError};
use crate::mac::sync::{run_sync_beacon, SyncContext, SyncError, SyncState};
use crate::plant::{PlantError, Robot};
use crate::sim::{ClockSet, Engine, NodeClock, NodeId, Purpose, RngStream, RunSummary, SimError, SimTime};

use super::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sync(#[from] SyncError),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ev {
    CycleStart,
    Slot(usize),
    CycleEnd,
    Inject(usize),
    Appear(usize),
    /// End of the current slot's airtime: receptions land.
    AirtimeEnd,
}

/// Effect of a transmission, applied when its airtime ends.
enum Arrival {
    Rx(TraceRow),
    Apply(NodeId, Frame),
}

pub struct RunOutput {
    pub trace: Trace,
    pub metrics: MetricsReport,
    pub summary: RunSummary,
    pub end_reason: String,
}

struct World {
    cfg: ScenarioConfig,
    base: CycleSchedule,
    current: CycleSchedule,
    loops: BTreeMap<u16, LoopSpec>,
    channel: Channel,
    clocks: ClockSet,
    sync: BTreeMap<NodeId, SyncState>,
    sync_rng: BTreeMap<NodeId, RngStream>,
    robots: BTreeMap<NodeId, Robot>,
    controller: PathController,
    controller_node: NodeId,
    local_robot: Option<NodeId>,
    obstacles: Vec<Segment>,
    airtime: u64,
    guard_us: f64,
    trace: Trace,
    cycle: u64,
    cycle_start: SimTime,
    fb_inbox: Vec<FeedbackSample>,
    cmds: BTreeMap<u16, PendingFrame>,
    estop_frame: Option<PendingFrame>,
    estop_seq: u16,
    fb_seq: BTreeMap<NodeId, u16>,
    in_flight: Vec<Arrival>,
    end_reason: Option<String>,
}

/// Runs one scenario to completion (all paths done, emergency stop settled,
/// or the time limit).
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, RunError> {
    cfg.validate()?;
    let mut world = World::new(cfg.clone())?;
    let mut engine: Engine<Ev> = Engine::new();
    for (i, inj) in cfg.injections.iter().enumerate() {
        engine.schedule(inj.at_us, Ev::Inject(i))?;
    }
    for (i, ob) in cfg.obstacles.iter().enumerate() {
        if let Some(at) = ob.appear_at_us {
            engine.schedule(at, Ev::Appear(i))?;
        }
    }
    engine.schedule(0, Ev::CycleStart)?;
    let mut failure: Option<RunError> = None;
    let summary = engine.run_until(cfg.max_time_us(), |eng, now, ev| {
        if let Err(e) = world.handle(eng, now, ev) {
            failure = Some(e);
            eng.halt();
        }
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let end_reason = world.end_reason.clone().unwrap_or_else(|| "max-time".into());
    let mut trace = std::mem::take(&mut world.trace);
    if world.end_reason.is_none() {
        trace.push(
            TraceRow::new(summary.final_time, world.cycle, world.controller_node, TraceEvent::End)
                .detail(&end_reason),
        );
    }
    let metrics = compute_metrics(&trace, cfg);
    Ok(RunOutput {
        trace,
        metrics,
        summary,
        end_reason,
    })
}

impl World {
    fn new(cfg: ScenarioConfig) -> Result<Self, RunError> {
        let controller_node = cfg.controller_node();
        let loops_vec = cfg.loops();
        let hop = HopSequence::seeded(cfg.protocol.hop_channels, cfg.seed, controller_node);
        let base = build_schedule(&loops_vec, &cfg.protocol, &hop)?;
        let channel = Channel::new(cfg.seed, cfg.protocol.hop_channels, cfg.link_models()?)?;

        let mut clocks = ClockSet::new();
        let mut sync = BTreeMap::new();
        for n in &cfg.nodes {
            let max = cfg.protocol.sync.max_drift_ppm;
            let mut stream = RngStream::new(cfg.seed, n.id, Purpose::Drift);
            let drift = if max > 0.0 { stream.rng().gen_range(-max..=max) } else { 0.0 };
            clocks.insert(NodeClock::new(n.id, drift));
            sync.insert(n.id, SyncState::new(n.id));
        }

        let mut controller = PathController::new(controller_node, cfg.controller.clone());
        let mut robots = BTreeMap::new();
        let leader = cfg.nodes.iter().find(|n| n.role == Role::Leader).map(|n| n.id);
        for n in cfg.robots() {
            robots.insert(
                n.id,
                Robot::new(n.id, n.robot.clone(), n.start, cfg.protocol.watchdog_cycles),
            );
            let guidance = match n.role {
                Role::Follower => Guidance::Follow {
                    leader: leader.expect("validated leader-follower config"),
                    queue: FollowerQueue::new(
                        cfg.controller.follower_min_spacing_m,
                        cfg.controller.follower_standoff_m,
                    ),
                },
                _ => Guidance::Path(
                    ReferencePath::new(n.path.clone(), cfg.controller.tolerance_m)
                        .expect("validated path"),
                ),
            };
            controller.add_robot(n.id, n.robot.clone(), n.start, guidance);
        }
        let local_robot = match cfg.kind {
            ScenarioKind::LeaderFollower => leader,
            ScenarioKind::RemoteControl => None,
        };

        let obstacles = cfg
            .obstacles
            .iter()
            .filter(|o| o.appear_at_us.is_none())
            .map(|o| o.segment())
            .collect();
        let airtime = cfg.protocol.phy.airtime_us();
        let guard_us = (cfg.protocol.slot_duration_us - airtime) as f64 / 2.0;
        Ok(Self {
            current: base.clone(),
            base,
            loops: loops_vec.into_iter().map(|l| (l.id, l)).collect(),
            channel,
            clocks,
            sync,
            sync_rng: BTreeMap::new(),
            robots,
            controller,
            controller_node,
            local_robot,
            obstacles,
            airtime,
            guard_us,
            trace: Trace::default(),
            cycle: 0,
            cycle_start: 0,
            fb_inbox: Vec::new(),
            cmds: BTreeMap::new(),
            estop_frame: None,
            estop_seq: 0,
            fb_seq: BTreeMap::new(),
            in_flight: Vec::new(),
            end_reason: None,
            cfg,
        })
    }

    fn row(&self, now: SimTime, node: NodeId, event: TraceEvent) -> TraceRow {
        TraceRow::new(now, self.cycle, node, event)
    }

    /// Clock error of `node` relative to the sync originator.
    fn misalignment_us(&self, node: NodeId, now: SimTime) -> f64 {
        let err = |n| self.clocks.get(n).map(|c| c.error_us(now)).unwrap_or(0.0);
        (err(node) - err(self.controller_node)).abs()
    }

    fn can_transmit(&self, node: NodeId, now: SimTime) -> bool {
        node == self.controller_node
            || (self.sync[&node].synced && self.misalignment_us(node, now) <= self.guard_us)
    }

    fn listener_block(&self, node: NodeId, now: SimTime) -> Option<Cause> {
        (node != self.controller_node && self.misalignment_us(node, now) > self.guard_us)
            .then_some(Cause::DesyncedListener)
    }

    fn handle(&mut self, eng: &mut Engine<Ev>, now: SimTime, ev: Ev) -> Result<(), RunError> {
        match ev {
            Ev::CycleStart => self.start_cycle(eng, now),
            Ev::Slot(pos) => {
                self.slot(now, pos)?;
                if !self.in_flight.is_empty() {
                    eng.schedule(now + self.airtime, Ev::AirtimeEnd)?;
                }
                Ok(())
            }
            Ev::AirtimeEnd => {
                self.land(now);
                Ok(())
            }
            Ev::CycleEnd => self.end_cycle(eng, now),
            Ev::Inject(i) => {
                let inj = self.cfg.injections[i].clone();
                if let Some(robot) = self.robots.get(&inj.robot) {
                    let p = robot.pose;
                    let (s, c) = p.theta.sin_cos();
                    let centre = Point::new(p.x + inj.distance_m * c, p.y + inj.distance_m * s);
                    let (nx, ny) = (-s * inj.half_width_m, c * inj.half_width_m);
                    let seg = Segment::new(
                        Point::new(centre.x + nx, centre.y + ny),
                        Point::new(centre.x - nx, centre.y - ny),
                    );
                    self.obstacles.push(seg);
                    let row = self
                        .row(now, inj.robot, TraceEvent::Obstacle)
                        .detail("injected")
                        .values(&[seg.a.x, seg.a.y, seg.b.x, seg.b.y]);
                    self.trace.push(row);
                }
                Ok(())
            }
            Ev::Appear(i) => {
                let seg = self.cfg.obstacles[i].segment();
                self.obstacles.push(seg);
                let row = self
                    .row(now, self.controller_node, TraceEvent::Obstacle)
                    .detail("appeared")
                    .values(&[seg.a.x, seg.a.y, seg.b.x, seg.b.y]);
                self.trace.push(row);
                Ok(())
            }
        }
    }

    fn start_cycle(&mut self, eng: &mut Engine<Ev>, now: SimTime) -> Result<(), RunError> {
        self.cycle_start = now;
        self.current = self.base.for_cycle(self.cycle);
        self.fb_inbox.clear();
        self.cmds.clear();
        self.estop_frame = None;
        for pos in 0..self.current.slots.len() {
            eng.schedule(now + self.current.slot_offset_us(pos), Ev::Slot(pos))?;
        }
        eng.schedule(now + self.current.cycle_length_us, Ev::CycleEnd)?;
        Ok(())
    }

    fn global_slot(&self, pos: usize) -> u64 {
        self.cycle * self.current.slots.len() as u64 + pos as u64
    }

    fn slot(&mut self, now: SimTime, pos: usize) -> Result<(), RunError> {
        let slot = self.current.slots[pos];
        let at = SlotRef {
            slot: self.global_slot(pos),
            channel: slot.channel,
            start: now,
        };
        let phys = slot.physical_channel(self.cfg.protocol.hop_channels);
        match slot.direction {
            Direction::Sync => self.sync_slot(now, pos, at, phys),
            Direction::Uplink => self.uplink(now, pos, at, phys, slot.loop_id.expect("uplink has loop")),
            Direction::Compute => self.compute(now),
            Direction::Downlink => {
                let id = slot.loop_id.expect("downlink has loop");
                if let Some(mut pf) = self.cmds.remove(&id) {
                    self.attempt(&mut pf, now, pos, at, phys, "downlink")?;
                    self.cmds.insert(id, pf);
                }
                Ok(())
            }
            Direction::Retx => self.retx(now, pos, at, phys),
        }
    }

    fn sync_slot(&mut self, now: SimTime, pos: usize, at: SlotRef, phys: u16) -> Result<(), RunError> {
        let cycle = self.cycle;
        let blackouts = self.cfg.blackouts.clone();
        let blocked = move |n: NodeId| blackouts.iter().any(|b| b.covers(n, cycle));
        let report = run_sync_beacon(
            SyncContext {
                channel: &mut self.channel,
                clocks: &mut self.clocks,
                states: &mut self.sync,
                jitter: &mut self.sync_rng,
                master_seed: self.cfg.seed,
            },
            &self.cfg.protocol.sync,
            self.controller_node,
            cycle,
            at.slot,
            at.channel,
            now,
            self.airtime,
            &blocked,
        )?;
        for (w, txs) in report.waves.iter().enumerate() {
            for tx in txs {
                let row = self
                    .row(now, tx.sender, TraceEvent::Tx)
                    .peer(BROADCAST)
                    .msg("SYNC")
                    .seq(tx.frame.seq())
                    .channel(phys)
                    .detail("sync")
                    .values(&[pos as f64, (w + 1) as f64]);
                self.trace.push(row);
            }
        }
        for r in &report.received {
            let row = self
                .row(now, r.node, TraceEvent::Rx)
                .peer(self.controller_node)
                .msg("SYNC")
                .seq(cycle as u16)
                .channel(phys)
                .detail(Cause::Delivered.as_str())
                .values(&[pos as f64, f64::from(r.wave)]);
            self.trace.push(row);
        }
        let received: BTreeMap<NodeId, (f64, u8)> = report
            .received
            .iter()
            .map(|r| (r.node, (r.residual_us, r.wave)))
            .collect();
        let states: Vec<SyncState> = self
            .sync
            .values()
            .filter(|s| s.node != self.controller_node)
            .cloned()
            .collect();
        for s in states {
            let detail = if received.contains_key(&s.node) {
                "synced"
            } else if s.synced {
                "missed"
            } else {
                "desynced"
            };
            let (res, wave) = received.get(&s.node).copied().unwrap_or((s.last_correction_us, 0));
            let row = self
                .row(now, s.node, TraceEvent::Sync)
                .detail(detail)
                .values(&[res, f64::from(s.missed_beacons), f64::from(wave)]);
            self.trace.push(row);
        }
        Ok(())
    }

    fn attempt(
        &mut self,
        pf: &mut PendingFrame,
        now: SimTime,
        pos: usize,
        at: SlotRef,
        phys: u16,
        kind: &str,
    ) -> Result<SlotAttempt, RunError> {
        let can_tx: BTreeMap<NodeId, bool> = self
            .sync
            .keys()
            .map(|&n| (n, self.can_transmit(n, now)))
            .collect();
        let blocks: BTreeMap<NodeId, Option<Cause>> = self
            .sync
            .keys()
            .map(|&n| (n, self.listener_block(n, now)))
            .collect();
        let attempt = pf.attempt(
            &mut self.channel,
            at,
            self.airtime,
            &|n| can_tx.get(&n).copied().unwrap_or(false),
            &|n| blocks.get(&n).copied().flatten(),
        )?;
        let msg = pf.frame.msg_type().as_str();
        for tx in &attempt.transmissions {
            let row = self
                .row(now, tx.sender, TraceEvent::Tx)
                .peer(pf.frame.dst())
                .msg(msg)
                .seq(pf.frame.seq())
                .channel(phys)
                .detail(kind)
                .values(&[pos as f64]);
            self.trace.push(row);
        }
        let rx_time = now + self.airtime;
        for o in &attempt.outcomes {
            let row = TraceRow::new(rx_time, self.cycle, o.receiver, TraceEvent::Rx)
                .peer(pf.frame.src())
                .msg(msg)
                .seq(pf.frame.seq())
                .channel(phys)
                .detail(o.cause.as_str())
                .values(&[pos as f64]);
            self.in_flight.push(Arrival::Rx(row));
            if o.received && self.robots.contains_key(&o.receiver) {
                self.in_flight.push(Arrival::Apply(o.receiver, pf.frame));
            }
        }
        Ok(attempt)
    }

    fn land(&mut self, now: SimTime) {
        for arrival in std::mem::take(&mut self.in_flight) {
            match arrival {
                Arrival::Rx(row) => self.trace.push(row),
                Arrival::Apply(id, frame) => {
                    let robot = self.robots.get_mut(&id).expect("robot exists");
                    let result = robot.apply_command(&frame);
                    let (l, r, f) = match frame {
                        Frame::Cmd {
                            left_mms,
                            right_mms,
                            flags,
                            ..
                        } => (f64::from(left_mms), f64::from(right_mms), f64::from(flags)),
                        _ => (0.0, 0.0, 0.0),
                    };
                    let row = self
                        .row(now, id, TraceEvent::Apply)
                        .peer(frame.src())
                        .msg(frame.msg_type().as_str())
                        .seq(frame.seq())
                        .detail(result.as_str())
                        .values(&[l, r, f]);
                    self.trace.push(row);
                }
            }
        }
    }

    fn uplink(&mut self, now: SimTime, pos: usize, at: SlotRef, phys: u16, loop_id: u16) -> Result<(), RunError> {
        let lp = self.loops[&loop_id].clone();
        let robot_id = lp.plant;
        if !self.can_transmit(robot_id, now) {
            for l in std::iter::once(lp.controller).chain(lp.relays.iter().copied()) {
                let row = TraceRow::new(now + self.airtime, self.cycle, l, TraceEvent::Rx)
                    .peer(robot_id)
                    .msg("FB")
                    .channel(phys)
                    .detail(Cause::NoTransmitter.as_str())
                    .values(&[pos as f64]);
                self.in_flight.push(Arrival::Rx(row));
            }
            return Ok(());
        }
        let robot = &self.robots[&robot_id];
        let ticks = robot.wheels.ticks;
        let range = robot.read_distance(&self.obstacles);
        let seq = {
            let s = self.fb_seq.entry(robot_id).or_insert(0);
            *s = s.wrapping_add(1);
            *s
        };
        let frame = Frame::Fb {
            src: robot_id,
            dst: lp.controller,
            seq,
            left_ticks: ticks.0,
            right_ticks: ticks.1,
            range_mm: range,
        };
        let row = self
            .row(now, robot_id, TraceEvent::FbSample)
            .seq(seq)
            .values(&[f64::from(ticks.0), f64::from(ticks.1), f64::from(range)]);
        self.trace.push(row);
        let mut pf = PendingFrame::new(frame, robot_id, [lp.controller], lp.relays.iter().copied());
        self.attempt(&mut pf, now, pos, at, phys, "uplink")?;
        if pf.has(lp.controller) {
            self.fb_inbox.push(FeedbackSample {
                robot: robot_id,
                ticks,
                range_mm: range,
                sample_time: now,
            });
        }
        Ok(())
    }

    fn compute(&mut self, now: SimTime) -> Result<(), RunError> {
        let mut inbox = std::mem::take(&mut self.fb_inbox);
        if let Some(id) = self.local_robot {
            let robot = &self.robots[&id];
            let sample = FeedbackSample {
                robot: id,
                ticks: robot.wheels.ticks,
                range_mm: robot.read_distance(&self.obstacles),
                sample_time: now,
            };
            let row = self
                .row(now, id, TraceEvent::FbSample)
                .detail("local")
                .values(&[
                    f64::from(sample.ticks.0),
                    f64::from(sample.ticks.1),
                    f64::from(sample.range_mm),
                ]);
            self.trace.push(row);
            inbox.push(sample);
        }
        inbox.sort_by_key(|s| s.robot);
        let out = self.controller.controller_cycle(&inbox);
        let ctl = self.controller_node;

        if let Some(e) = out.estop {
            let row = self
                .row(now, ctl, TraceEvent::Estop)
                .peer(e.robot)
                .values(&[f64::from(e.range_mm), e.sample_time as f64]);
            self.trace.push(row);
        }
        for ev in &out.events {
            let row = match *ev {
                crate::control::ControlEvent::ReferenceAdvanced { robot, index } => self
                    .row(now, ctl, TraceEvent::Ref)
                    .peer(robot)
                    .values(&[index as f64]),
                crate::control::ControlEvent::PathComplete { robot } => self
                    .row(now, ctl, TraceEvent::Complete)
                    .peer(robot)
                    .detail("path-complete"),
                crate::control::ControlEvent::FollowerPoint { robot, point } => self
                    .row(now, ctl, TraceEvent::FollowerRef)
                    .peer(robot)
                    .values(&[point.x, point.y]),
            };
            self.trace.push(row);
        }
        for cmd in &out.commands {
            let Frame::Cmd {
                seq,
                left_mms,
                right_mms,
                flags,
                ..
            } = cmd.frame
            else {
                continue;
            };
            let mut row = self
                .row(now, ctl, TraceEvent::Cmd)
                .peer(cmd.robot)
                .msg("CMD")
                .seq(seq)
                .values(&[f64::from(left_mms), f64::from(right_mms), f64::from(flags)]);
            row.f4 = cmd.informed_by.map(|t| t as f64);
            if Some(cmd.robot) == self.local_robot {
                row = row.detail("local");
            }
            self.trace.push(row);
        }
        for cmd in out.commands {
            if Some(cmd.robot) == self.local_robot {
                let robot = self.robots.get_mut(&cmd.robot).expect("local robot exists");
                let result = robot.apply_command(&cmd.frame);
                let Frame::Cmd {
                    seq,
                    left_mms,
                    right_mms,
                    flags,
                    ..
                } = cmd.frame
                else {
                    continue;
                };
                let row = self
                    .row(now, cmd.robot, TraceEvent::Apply)
                    .peer(ctl)
                    .msg("CMD")
                    .seq(seq)
                    .detail(result.as_str())
                    .values(&[f64::from(left_mms), f64::from(right_mms), f64::from(flags)]);
                self.trace.push(row);
            } else {
                let lp = &self.loops[&u16::from(cmd.robot)];
                self.cmds.insert(
                    lp.id,
                    PendingFrame::new(cmd.frame, ctl, [cmd.robot], lp.relays.iter().copied()),
                );
            }
        }
        Ok(())
    }

    /// Shared retransmission slot: the emergency-stop broadcast has priority
    /// while any robot lacks this cycle's stop command; otherwise the first
    /// outstanding command in loop order is re-flooded.
    fn retx(&mut self, now: SimTime, pos: usize, at: SlotRef, phys: u16) -> Result<(), RunError> {
        if self.controller.estop_latched && self.estop_frame.is_none() {
            let lacking: Vec<NodeId> = self
                .cmds
                .values()
                .filter(|pf| pf.outstanding())
                .flat_map(|pf| pf.targets.iter().copied())
                .collect();
            if !lacking.is_empty() {
                let relays: Vec<NodeId> = self
                    .loops
                    .values()
                    .flat_map(|l| l.relays.iter().copied())
                    .collect();
                self.estop_seq = self.estop_seq.wrapping_add(1);
                let frame = Frame::Estop {
                    src: self.controller_node,
                    seq: self.estop_seq,
                };
                self.estop_frame = Some(PendingFrame::new(frame, self.controller_node, lacking, relays));
            }
        }
        if let Some(mut pf) = self.estop_frame.take() {
            if pf.outstanding() {
                self.attempt(&mut pf, now, pos, at, phys, "retx")?;
                self.estop_frame = Some(pf);
                return Ok(());
            }
            self.estop_frame = Some(pf);
        }
        let next = self.cmds.iter().find(|(_, pf)| pf.outstanding()).map(|(&id, _)| id);
        if let Some(id) = next {
            let mut pf = self.cmds.remove(&id).expect("present");
            self.attempt(&mut pf, now, pos, at, phys, "retx")?;
            self.cmds.insert(id, pf);
        }
        Ok(())
    }

    fn end_cycle(&mut self, eng: &mut Engine<Ev>, now: SimTime) -> Result<(), RunError> {
        let dt = self.current.cycle_length_us as f64 * 1e-6;
        let ids: Vec<NodeId> = self.robots.keys().copied().collect();
        for id in ids {
            let robot = self.robots.get_mut(&id).expect("robot");
            robot.plant_tick(dt)?;
            let (pose, w) = (robot.pose, robot.wheels);
            let row = self.row(now, id, TraceEvent::Pose).values(&[pose.x, pose.y, pose.theta]);
            self.trace.push(row);
            let row = self
                .row(now, id, TraceEvent::Wheels)
                .values(&[w.commanded.0, w.commanded.1, w.actual.0, w.actual.1]);
            self.trace.push(row);
        }
        let stationary = self.robots.values().all(|r| r.is_stationary());
        let reason = if stationary && self.controller.estop_latched {
            Some("estop-stationary")
        } else if stationary && self.controller.all_complete() {
            Some("path-complete")
        } else if now + self.current.cycle_length_us > self.cfg.max_time_us() {
            Some("max-time")
        } else {
            None
        };
        if let Some(reason) = reason {
            let row = self.row(now, self.controller_node, TraceEvent::End).detail(reason);
            self.trace.push(row);
            self.end_reason = Some(reason.to_owned());
            eng.halt();
            return Ok(());
        }
        self.cycle += 1;
        eng.schedule(now, Ev::CycleStart)?;
        Ok(())
    }
}
