use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Point, Pose};
use crate::plant::RobotParams;

/// Curvature law used when the target is ahead of the robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SteeringLaw {
    /// Parabola `y = a x^2` tangent to the heading through the target;
    /// curvature at the robot is `2 y_t / x_t^2`.
    #[default]
    Parabola,
    /// Circle tangent to the heading through the target:
    /// `2 y_t / (x_t^2 + y_t^2)`.
    CircularArc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    pub v_nom_mms: f64,
    /// Approach taper gain, 1/s: `v = min(v_nom, k_slow * distance)`.
    pub k_slow: f64,
    /// Targets with body-frame `x <= x_min_m` are turned towards in place.
    pub x_min_m: f64,
    /// Targets further than this off the heading are also turned towards in
    /// place before driving.
    pub align_bearing_rad: f64,
    pub kappa_max: f64,
    pub turn_rate_rad_s: f64,
    pub tolerance_m: f64,
    pub steering: SteeringLaw,
    pub estop_threshold_mm: u16,
    pub follower_min_spacing_m: f64,
    pub follower_standoff_m: f64,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            v_nom_mms: 100.0,
            k_slow: 1.0,
            x_min_m: 0.02,
            align_bearing_rad: 0.15,
            kappa_max: 8.0,
            turn_rate_rad_s: 1.0,
            tolerance_m: 0.02,
            steering: SteeringLaw::Parabola,
            estop_threshold_mm: 150,
            follower_min_spacing_m: 0.05,
            follower_standoff_m: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelSpeeds {
    pub left: f64,
    pub right: f64,
}

impl WheelSpeeds {
    pub const STOP: WheelSpeeds = WheelSpeeds { left: 0.0, right: 0.0 };
}

/// Distance to the target and its bearing in the robot frame.
pub fn deviation_error(pose: &Pose, target: &Point) -> (f64, f64) {
    let body = pose.to_body(target);
    let distance = body.x.hypot(body.y);
    let bearing = if distance == 0.0 {
        0.0
    } else {
        normalize_angle(body.y.atan2(body.x))
    };
    (distance, bearing)
}

/// Unclamped curvature towards a body-frame target with `x_t > 0`.
pub fn curvature(law: SteeringLaw, x_t: f64, y_t: f64) -> f64 {
    match law {
        SteeringLaw::Parabola => 2.0 * y_t / (x_t * x_t),
        SteeringLaw::CircularArc => 2.0 * y_t / (x_t * x_t + y_t * y_t),
    }
}

/// Scales both wheels by the same factor so neither exceeds `max`.
pub fn clamp_uniform(speeds: WheelSpeeds, max: f64) -> WheelSpeeds {
    let peak = speeds.left.abs().max(speeds.right.abs());
    if peak <= max {
        return speeds;
    }
    let k = max / peak;
    WheelSpeeds {
        left: speeds.left * k,
        right: speeds.right * k,
    }
}

/// Wheel speeds (mm/s) that steer the robot to `target`.
///
/// `approach_m` is the distance the approach taper sees; for a fixed path
/// it is the distance to the target itself.
pub fn quadratic_curve_speeds(
    pose: &Pose,
    target: &Point,
    v_nom_mms: f64,
    approach_m: f64,
    params: &ControllerParams,
    robot: &RobotParams,
) -> WheelSpeeds {
    let body = pose.to_body(target);
    let (_, bearing) = deviation_error(pose, target);
    let half_track = 0.5 * robot.track_width_m;
    let max = f64::from(robot.max_wheel_speed_mms);

    if body.x <= params.x_min_m || bearing.abs() > params.align_bearing_rad {
        let w = params.turn_rate_rad_s * half_track * 1000.0;
        let w = if bearing >= 0.0 { w } else { -w };
        return clamp_uniform(WheelSpeeds { left: -w, right: w }, max);
    }

    let kappa = curvature(params.steering, body.x, body.y).clamp(-params.kappa_max, params.kappa_max);
    let v = v_nom_mms.min(params.k_slow * approach_m.max(0.0) * 1000.0);
    clamp_uniform(
        WheelSpeeds {
            left: v * (1.0 - kappa * half_track),
            right: v * (1.0 + kappa * half_track),
        },
        max,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn wide_open() -> ControllerParams {
        ControllerParams {
            align_bearing_rad: PI,
            k_slow: 1e6,
            ..ControllerParams::default()
        }
    }

    #[test]
    fn deviation_examples() {
        let (d, b) = deviation_error(&Pose::default(), &Point::new(1.0, 0.0));
        assert!((d - 1.0).abs() < 1e-12 && b.abs() < 1e-12);
        let (d, b) = deviation_error(&Pose::default(), &Point::new(0.0, 1.0));
        assert!((d - 1.0).abs() < 1e-12 && (b - PI / 2.0).abs() < 1e-12);
        let (d, b) = deviation_error(&Pose::new(1.0, 1.0, PI / 2.0), &Point::new(0.0, 1.0));
        assert!((d - 1.0).abs() < 1e-12 && (b - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn dead_ahead_goes_straight() {
        let s = quadratic_curve_speeds(
            &Pose::default(),
            &Point::new(1.0, 0.0),
            100.0,
            1.0,
            &ControllerParams::default(),
            &RobotParams::default(),
        );
        assert_eq!(s, WheelSpeeds { left: 100.0, right: 100.0 });
    }

    #[test]
    fn parabola_curvature_examples() {
        assert!((curvature(SteeringLaw::Parabola, 1.0, 1.0) - 2.0).abs() < 1e-12);
        assert!((curvature(SteeringLaw::Parabola, 0.5, -0.5) + 4.0).abs() < 1e-12);
        assert!((curvature(SteeringLaw::CircularArc, 1.0, 1.0) - 1.0).abs() < 1e-12);
        let s = quadratic_curve_speeds(
            &Pose::default(),
            &Point::new(1.0, 1.0),
            100.0,
            10.0,
            &wide_open(),
            &RobotParams::default(),
        );
        assert!((s.right - 111.7).abs() < 1e-9);
        assert!((s.left - 88.3).abs() < 1e-9);
    }

    #[test]
    fn target_behind_rotates_in_place() {
        let s = quadratic_curve_speeds(
            &Pose::default(),
            &Point::new(-1.0, 0.2),
            100.0,
            1.0,
            &ControllerParams::default(),
            &RobotParams::default(),
        );
        assert!((s.left + s.right).abs() < 1e-12);
        assert!(s.right > 0.0);
    }

    #[test]
    fn approach_taper() {
        let s = quadratic_curve_speeds(
            &Pose::default(),
            &Point::new(0.05, 0.0),
            100.0,
            0.05,
            &ControllerParams::default(),
            &RobotParams::default(),
        );
        assert!((s.left - 50.0).abs() < 1e-9 && (s.right - 50.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn curvature_turns_toward_target(x in 0.021f64..3.0, y in -3.0f64..3.0) {
            prop_assume!(y.abs() > 1e-6);
            for law in [SteeringLaw::Parabola, SteeringLaw::CircularArc] {
                prop_assert_eq!(curvature(law, x, y).signum(), y.signum());
            }
            let s = quadratic_curve_speeds(
                &Pose::default(), &Point::new(x, y), 100.0, 1.0,
                &ControllerParams::default(), &RobotParams::default(),
            );
            prop_assert_eq!((s.right - s.left).signum(), y.signum());
        }

        #[test]
        fn uniform_clamp_preserves_ratio(l in -2000.0f64..2000.0, r in -2000.0f64..2000.0) {
            prop_assume!((l + r).abs() > 1.0 && (l.abs().max(r.abs())) > 300.0);
            let c = clamp_uniform(WheelSpeeds { left: l, right: r }, 300.0);
            prop_assert!(c.left.abs() <= 300.0 + 1e-9 && c.right.abs() <= 300.0 + 1e-9);
            let before = (r - l) / (r + l);
            let after = (c.right - c.left) / (c.right + c.left);
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
        }
    }
}
