use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePath {
    pub points: Vec<Point>,
    pub tolerance_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Advance {
    Index(usize),
    Complete,
}

impl ReferencePath {
    pub fn new(points: Vec<Point>, tolerance_m: f64) -> Option<Self> {
        (!points.is_empty() && tolerance_m > 0.0).then_some(Self { points, tolerance_m })
    }

    pub fn is_final(&self, index: usize) -> bool {
        index + 1 >= self.points.len()
    }
}

/// Moves past every reference point the robot is already within tolerance
/// of. Reaching the final point completes the path.
pub fn advance_reference(index: usize, pose: &Pose, path: &ReferencePath) -> Advance {
    let here = pose.position();
    let mut i = index;
    while i < path.points.len() && here.distance(&path.points[i]) < path.tolerance_m {
        if path.is_final(i) {
            return Advance::Complete;
        }
        i += 1;
    }
    Advance::Index(i.min(path.points.len() - 1))
}

/// Reference points for the follower, laid down behind the leader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerQueue {
    pub points: VecDeque<Point>,
    pub min_spacing_m: f64,
    pub standoff_m: f64,
    last_queued: Option<Point>,
}

impl FollowerQueue {
    pub fn new(min_spacing_m: f64, standoff_m: f64) -> Self {
        Self {
            points: VecDeque::new(),
            min_spacing_m,
            standoff_m,
            last_queued: None,
        }
    }

    pub fn front(&self) -> Option<&Point> {
        self.points.front()
    }

    pub fn pop_front(&mut self) -> Option<Point> {
        self.points.pop_front()
    }

    /// Path length from `from` through every queued point.
    pub fn remaining_length(&self, from: &Point) -> f64 {
        let mut prev = *from;
        let mut total = 0.0;
        for p in &self.points {
            total += prev.distance(p);
            prev = *p;
        }
        total
    }
}

/// Appends the leader's position once it is at least `min_spacing_m` from
/// the last queued point. Returns the appended point.
pub fn leader_update_follower_refs(leader: &Pose, queue: &mut FollowerQueue) -> Option<Point> {
    let here = leader.position();
    let far_enough = match queue.last_queued {
        None => true,
        Some(last) => here.distance(&last) >= queue.min_spacing_m,
    };
    if far_enough {
        queue.points.push_back(here);
        queue.last_queued = Some(here);
        Some(here)
    } else {
        None
    }
}
