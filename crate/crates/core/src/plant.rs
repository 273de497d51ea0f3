//! Ground-truth differential-drive robot: slew-limited wheel actuation,
//! exact-arc pose integration, quadrature encoder ticks and a forward
//! infrared range sensor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point, Pose, Segment};
use crate::mac::frame::{Frame, NO_READING};
use crate::sim::NodeId;

/// Physical constants. The defaults are plausible small-robot values, not
/// measured ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotParams {
    pub wheel_radius_m: f64,
    pub track_width_m: f64,
    pub ticks_per_rev: u32,
    pub max_wheel_speed_mms: u32,
    pub actuation_rate_limit_mms2: f64,
    pub sensor_max_range_mm: u32,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            wheel_radius_m: 0.0325,
            track_width_m: 0.117,
            ticks_per_rev: 360,
            max_wheel_speed_mms: 300,
            actuation_rate_limit_mms2: 500.0,
            sensor_max_range_mm: 2000,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let ok = self.wheel_radius_m > 0.0
            && self.track_width_m > 0.0
            && self.ticks_per_rev > 0
            && self.max_wheel_speed_mms > 0
            && self.actuation_rate_limit_mms2 > 0.0
            && self.sensor_max_range_mm > 0;
        if ok {
            Ok(())
        } else {
            Err(PlantError::InvalidParams)
        }
    }

    /// Arc length of one encoder tick in meters.
    pub fn tick_quantum_m(&self) -> f64 {
        2.0 * PI * self.wheel_radius_m / f64::from(self.ticks_per_rev)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("robot parameters must all be strictly positive")]
    InvalidParams,
}

/// Exact integration of the unicycle model for constant wheel speeds (m/s).
pub fn step_kinematics(
    pose: &Pose,
    v_left: f64,
    v_right: f64,
    dt: f64,
    track_width_m: f64,
) -> Result<Pose, PlantError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(PlantError::NonPositiveStep(dt));
    }
    let v = 0.5 * (v_left + v_right);
    let omega = (v_right - v_left) / track_width_m;
    if omega.abs() < 1e-9 {
        let (s, c) = pose.theta.sin_cos();
        return Ok(Pose::new(pose.x + v * dt * c, pose.y + v * dt * s, pose.theta + omega * dt));
    }
    let r = v / omega;
    let th1 = pose.theta + omega * dt;
    Ok(Pose::new(
        pose.x + r * (th1.sin() - pose.theta.sin()),
        pose.y - r * (th1.cos() - pose.theta.cos()),
        th1,
    ))
}

/// Forward ray range to the nearest obstacle, in mm, or [`NO_READING`].
pub fn read_distance(pose: &Pose, obstacles: &[Segment], max_range_mm: u32) -> u16 {
    let origin = Point::new(pose.x, pose.y);
    let nearest = obstacles
        .iter()
        .filter_map(|s| s.ray_hit(&origin, pose.theta))
        .min_by(|a, b| a.total_cmp(b));
    match nearest {
        Some(d) => {
            let mm = (d * 1000.0).round();
            if mm > f64::from(max_range_mm) || mm >= f64::from(NO_READING) {
                NO_READING
            } else {
                mm as u16
            }
        }
        None => NO_READING,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelState {
    /// mm/s
    pub commanded: (f64, f64),
    /// mm/s
    pub actual: (f64, f64),
    pub ticks: (i32, i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyResult {
    Applied,
    EstopLatched,
    Stale,
    IgnoredWhileLatched,
    NotAddressed,
}

impl ApplyResult {
    pub fn as_str(self) -> &'static str {
        match self {
            ApplyResult::Applied => "applied",
            ApplyResult::EstopLatched => "estop-latched",
            ApplyResult::Stale => "stale",
            ApplyResult::IgnoredWhileLatched => "ignored-latched",
            ApplyResult::NotAddressed => "not-addressed",
        }
    }
}

/// Wrap-aware "a is newer than b" on 16-bit sequence numbers.
pub fn seq_newer(a: u16, b: u16) -> bool {
    (a.wrapping_sub(b) as i16) > 0
}

#[derive(Debug, Clone)]
pub struct Robot {
    pub id: NodeId,
    pub params: RobotParams,
    pub pose: Pose,
    pub wheels: WheelState,
    tick_remainder: (f64, f64),
    pub estop_latched: bool,
    last_seq: Option<u16>,
    cycles_without_cmd: u32,
    pub watchdog_cycles: u32,
}

impl Robot {
    pub fn new(id: NodeId, params: RobotParams, pose: Pose, watchdog_cycles: u32) -> Self {
        Self {
            id,
            params,
            pose,
            wheels: WheelState::default(),
            tick_remainder: (0.0, 0.0),
            estop_latched: false,
            last_seq: None,
            cycles_without_cmd: 0,
            watchdog_cycles,
        }
    }

    pub fn watchdog_expired(&self) -> bool {
        self.cycles_without_cmd >= self.watchdog_cycles
    }

    pub fn is_stationary(&self) -> bool {
        self.wheels.actual == (0.0, 0.0)
    }

    pub fn apply_command(&mut self, frame: &Frame) -> ApplyResult {
        match *frame {
            Frame::Estop { .. } => {
                self.latch_estop();
                ApplyResult::EstopLatched
            }
            Frame::Cmd {
                dst,
                seq,
                left_mms,
                right_mms,
                flags,
                ..
            } => {
                if dst != self.id {
                    return ApplyResult::NotAddressed;
                }
                if let Some(last) = self.last_seq {
                    if !seq_newer(seq, last) {
                        return ApplyResult::Stale;
                    }
                }
                self.last_seq = Some(seq);
                self.cycles_without_cmd = 0;
                if flags & crate::mac::frame::FLAG_ESTOP != 0 {
                    self.latch_estop();
                    return ApplyResult::EstopLatched;
                }
                if self.estop_latched {
                    return ApplyResult::IgnoredWhileLatched;
                }
                let max = f64::from(self.params.max_wheel_speed_mms);
                self.wheels.commanded = (
                    f64::from(left_mms).clamp(-max, max),
                    f64::from(right_mms).clamp(-max, max),
                );
                ApplyResult::Applied
            }
            _ => ApplyResult::NotAddressed,
        }
    }

    fn latch_estop(&mut self) {
        self.estop_latched = true;
        self.wheels.commanded = (0.0, 0.0);
    }

    /// Advances one control period of `dt` seconds.
    pub fn plant_tick(&mut self, dt: f64) -> Result<(), PlantError> {
        if dt.is_nan() || dt <= 0.0 {
            return Err(PlantError::NonPositiveStep(dt));
        }
        self.cycles_without_cmd = self.cycles_without_cmd.saturating_add(1);
        if self.watchdog_expired() || self.estop_latched {
            self.wheels.commanded = (0.0, 0.0);
        }
        let max = f64::from(self.params.max_wheel_speed_mms);
        let dv = self.params.actuation_rate_limit_mms2 * dt;
        let slew = |actual: f64, cmd: f64| -> f64 {
            let next = actual + (cmd - actual).clamp(-dv, dv);
            next.clamp(-max, max)
        };
        self.wheels.actual = (
            slew(self.wheels.actual.0, self.wheels.commanded.0),
            slew(self.wheels.actual.1, self.wheels.commanded.1),
        );
        let (vl, vr) = (self.wheels.actual.0 / 1000.0, self.wheels.actual.1 / 1000.0);
        if vl != 0.0 || vr != 0.0 {
            self.pose = step_kinematics(&self.pose, vl, vr, dt, self.params.track_width_m)?;
        }
        let per_m = f64::from(self.params.ticks_per_rev) / (2.0 * PI * self.params.wheel_radius_m);
        let count = |ds: f64, rem: &mut f64| -> i32 {
            let exact = ds * per_m + *rem;
            let whole = exact.round();
            *rem = exact - whole;
            whole as i32
        };
        let dl = count(vl * dt, &mut self.tick_remainder.0);
        let dr = count(vr * dt, &mut self.tick_remainder.1);
        self.wheels.ticks = (
            self.wheels.ticks.0.wrapping_add(dl),
            self.wheels.ticks.1.wrapping_add(dr),
        );
        Ok(())
    }

    pub fn read_distance(&self, obstacles: &[Segment]) -> u16 {
        read_distance(&self.pose, obstacles, self.params.sensor_max_range_mm)
    }
}
