//! Planar geometry shared by the plant, the controller and the metrics.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Normalizes an angle to `(-pi, pi]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut a = theta % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Robot pose: position in meters, heading in radians within `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Expresses a world point in this pose's body frame (x forward, y left).
    pub fn to_body(&self, p: &Point) -> Point {
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        let (s, c) = self.theta.sin_cos();
        Point::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// Advances the pose along a constant-curvature arc given the travelled
    /// distance and the heading change. Exact for any step size.
    pub fn advance_arc(&self, distance: f64, dtheta: f64) -> Pose {
        let (x, y) = if dtheta.abs() < 1e-9 {
            let mid = self.theta + 0.5 * dtheta;
            (self.x + distance * mid.cos(), self.y + distance * mid.sin())
        } else {
            let r = distance / dtheta;
            let th1 = self.theta + dtheta;
            (
                self.x + r * (th1.sin() - self.theta.sin()),
                self.y - r * (th1.cos() - self.theta.cos()),
            )
        };
        Pose::new(x, y, self.theta + dtheta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    /// Distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: &Point) -> f64 {
        let (dx, dy) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.a.distance(p);
        }
        let t = (((p.x - self.a.x) * dx + (p.y - self.a.y) * dy) / len2).clamp(0.0, 1.0);
        p.distance(&Point::new(self.a.x + t * dx, self.a.y + t * dy))
    }

    /// Range along the ray from `origin` with direction `heading` to this
    /// segment, if the ray hits it.
    pub fn ray_hit(&self, origin: &Point, heading: f64) -> Option<f64> {
        let (dx, dy) = (heading.cos(), heading.sin());
        let (ex, ey) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let denom = dx * ey - dy * ex;
        if denom.abs() < 1e-12 {
            return None;
        }
        let (wx, wy) = (self.a.x - origin.x, self.a.y - origin.y);
        let t = (wx * ey - wy * ex) / denom;
        let u = (wx * dy - wy * dx) / denom;
        (t >= 0.0 && (0.0..=1.0).contains(&u)).then_some(t)
    }
}

/// Distance from `p` to the nearest point of the polyline through `points`.
/// A single point degenerates to point distance; an empty polyline yields
/// `None`.
pub fn polyline_distance(points: &[Point], p: &Point) -> Option<f64> {
    match points {
        [] => None,
        [only] => Some(only.distance(p)),
        _ => points
            .windows(2)
            .map(|w| Segment::new(w[0], w[1]).distance_to(p))
            .min_by(|a, b| a.total_cmp(b)),
    }
}
