//! Path controller: dead reckoning from encoder feedback, quadratic-curve
//! steering toward reference points, follower reference generation and
//! the emergency-stop latch.

mod path;
mod steering;

pub use path::{advance_reference, leader_update_follower_refs, Advance, FollowerQueue, ReferencePath};
pub use steering::{
    clamp_uniform, curvature, deviation_error, quadratic_curve_speeds, ControllerParams, SteeringLaw,
    WheelSpeeds,
};

use std::collections::BTreeMap;

use crate::geometry::{Point, Pose};
use crate::mac::frame::{Frame, FLAG_ESTOP, NO_READING};
use crate::plant::RobotParams;
use crate::sim::{NodeId, SimTime};

/// Controller-side view of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub estimate: Pose,
    pub last_ticks: (i32, i32),
    pub ref_index: usize,
    pub v_nom_mms: f64,
    pub seq: u16,
    /// Sampling time of the newest feedback folded into `estimate`.
    pub informed_by: Option<SimTime>,
    pub complete: bool,
}

impl ControllerState {
    pub fn new(start: Pose, v_nom_mms: f64) -> Self {
        Self {
            estimate: start,
            last_ticks: (0, 0),
            ref_index: 0,
            v_nom_mms,
            seq: 0,
            informed_by: None,
            complete: false,
        }
    }
}

/// Integrates encoder increments through the exact-arc model.
pub fn dead_reckon(state: &mut ControllerState, ticks: (i32, i32), robot: &RobotParams) -> Pose {
    let q = robot.tick_quantum_m();
    let dl = f64::from(ticks.0.wrapping_sub(state.last_ticks.0)) * q;
    let dr = f64::from(ticks.1.wrapping_sub(state.last_ticks.1)) * q;
    state.last_ticks = ticks;
    if dl != 0.0 || dr != 0.0 {
        state.estimate = state
            .estimate
            .advance_arc(0.5 * (dl + dr), (dr - dl) / robot.track_width_m);
    }
    state.estimate
}

/// First robot whose range reading is under the threshold.
pub fn estop_decision(readings: &[(NodeId, u16)], threshold_mm: u16) -> Option<(NodeId, u16)> {
    readings
        .iter()
        .copied()
        .find(|&(_, mm)| mm != NO_READING && mm < threshold_mm)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Guidance {
    Path(ReferencePath),
    Follow { leader: NodeId, queue: FollowerQueue },
}

#[derive(Debug, Clone)]
pub struct RobotController {
    pub id: NodeId,
    pub params: RobotParams,
    pub state: ControllerState,
    pub guidance: Guidance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeedbackSample {
    pub robot: NodeId,
    pub ticks: (i32, i32),
    pub range_mm: u16,
    pub sample_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub robot: NodeId,
    pub frame: Frame,
    pub informed_by: Option<SimTime>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstopTrigger {
    pub robot: NodeId,
    pub range_mm: u16,
    pub sample_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlEvent {
    ReferenceAdvanced { robot: NodeId, index: usize },
    PathComplete { robot: NodeId },
    FollowerPoint { robot: NodeId, point: Point },
}

#[derive(Debug, Clone, Default)]
pub struct CycleOutput {
    pub commands: Vec<Command>,
    pub estop: Option<EstopTrigger>,
    pub events: Vec<ControlEvent>,
}

/// One controller instance steering every robot of a scenario.
#[derive(Debug, Clone)]
pub struct PathController {
    pub node: NodeId,
    pub params: ControllerParams,
    pub robots: BTreeMap<NodeId, RobotController>,
    pub estop_latched: bool,
}

impl PathController {
    pub fn new(node: NodeId, params: ControllerParams) -> Self {
        Self {
            node,
            params,
            robots: BTreeMap::new(),
            estop_latched: false,
        }
    }

    pub fn add_robot(&mut self, id: NodeId, params: RobotParams, start: Pose, guidance: Guidance) {
        let state = ControllerState::new(start, self.params.v_nom_mms);
        self.robots.insert(
            id,
            RobotController {
                id,
                params,
                state,
                guidance,
            },
        );
    }

    pub fn all_complete(&self) -> bool {
        self.robots.values().all(|r| r.state.complete)
    }

    /// Runs in the compute gap: folds in whatever feedback arrived, decides
    /// on emergency stop, and emits one command per robot. Missing feedback
    /// leaves the previous estimate in place.
    pub fn controller_cycle(&mut self, feedback: &[FeedbackSample]) -> CycleOutput {
        let mut out = CycleOutput::default();

        for fb in feedback {
            if let Some(r) = self.robots.get_mut(&fb.robot) {
                dead_reckon(&mut r.state, fb.ticks, &r.params);
                r.state.informed_by = Some(fb.sample_time);
            }
        }

        if !self.estop_latched {
            let readings: Vec<(NodeId, u16)> = feedback.iter().map(|f| (f.robot, f.range_mm)).collect();
            if let Some((robot, range_mm)) = estop_decision(&readings, self.params.estop_threshold_mm) {
                self.estop_latched = true;
                let sample_time = feedback
                    .iter()
                    .find(|f| f.robot == robot)
                    .map(|f| f.sample_time)
                    .unwrap_or_default();
                out.estop = Some(EstopTrigger {
                    robot,
                    range_mm,
                    sample_time,
                });
            }
        }

        let estimates: BTreeMap<NodeId, (Pose, bool)> = self
            .robots
            .iter()
            .map(|(&id, r)| (id, (r.state.estimate, r.state.complete)))
            .collect();
        let params = self.params.clone();
        let controller = self.node;
        let estop = self.estop_latched;

        for r in self.robots.values_mut() {
            let speeds = if estop {
                WheelSpeeds::STOP
            } else {
                steer_robot(r, &estimates, &params, &mut out.events)
            };
            r.state.seq = r.state.seq.wrapping_add(1);
            let frame = Frame::Cmd {
                src: controller,
                dst: r.id,
                seq: r.state.seq,
                left_mms: speeds.left.round() as i16,
                right_mms: speeds.right.round() as i16,
                flags: if estop { FLAG_ESTOP } else { 0 },
            };
            out.commands.push(Command {
                robot: r.id,
                frame,
                informed_by: r.state.informed_by,
            });
        }
        out
    }
}

fn steer_robot(
    r: &mut RobotController,
    estimates: &BTreeMap<NodeId, (Pose, bool)>,
    params: &ControllerParams,
    events: &mut Vec<ControlEvent>,
) -> WheelSpeeds {
    if r.state.complete {
        return WheelSpeeds::STOP;
    }
    let pose = r.state.estimate;
    match &mut r.guidance {
        Guidance::Path(path) => match advance_reference(r.state.ref_index, &pose, path) {
            Advance::Complete => {
                r.state.complete = true;
                events.push(ControlEvent::PathComplete { robot: r.id });
                WheelSpeeds::STOP
            }
            Advance::Index(i) => {
                if i != r.state.ref_index {
                    r.state.ref_index = i;
                    events.push(ControlEvent::ReferenceAdvanced { robot: r.id, index: i });
                }
                let target = path.points[i];
                let (distance, _) = deviation_error(&pose, &target);
                quadratic_curve_speeds(&pose, &target, r.state.v_nom_mms, distance, params, &r.params)
            }
        },
        Guidance::Follow { leader, queue } => {
            let Some(&(leader_pose, leader_done)) = estimates.get(leader) else {
                return WheelSpeeds::STOP;
            };
            if let Some(p) = leader_update_follower_refs(&leader_pose, queue) {
                events.push(ControlEvent::FollowerPoint { robot: r.id, point: p });
            }
            let here = pose.position();
            while let Some(front) = queue.front() {
                if here.distance(front) < params.tolerance_m {
                    queue.pop_front();
                    r.state.ref_index += 1;
                    events.push(ControlEvent::ReferenceAdvanced {
                        robot: r.id,
                        index: r.state.ref_index,
                    });
                } else {
                    break;
                }
            }
            let leader_at = leader_pose.position();
            let gap = here.distance(&leader_at);
            // Path length to the leader along the queued trace.
            let remaining = queue.remaining_length(&here)
                + queue.points.back().map_or(gap, |last| last.distance(&leader_at));
            if leader_done && (gap < queue.standoff_m + params.tolerance_m || queue.points.is_empty()) {
                r.state.complete = true;
                events.push(ControlEvent::PathComplete { robot: r.id });
                return WheelSpeeds::STOP;
            }
            if gap < queue.standoff_m {
                return WheelSpeeds::STOP;
            }
            match queue.front() {
                Some(target) => quadratic_curve_speeds(
                    &pose,
                    target,
                    r.state.v_nom_mms,
                    remaining - queue.standoff_m,
                    params,
                    &r.params,
                ),
                None => WheelSpeeds::STOP,
            }
        }
    }
}
