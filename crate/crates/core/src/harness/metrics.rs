//! Metrics computed purely from a trace plus the config that produced it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Role, ScenarioConfig};
use super::trace::{Trace, TraceEvent, TraceRow};
use crate::geometry::{polyline_distance, Point};
use crate::mac::frame::FLAG_ESTOP;
use crate::mac::schedule::{build_schedule, HopSequence};
use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub count: usize,
    pub min_us: f64,
    pub mean_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyDistribution {
    /// One closed-loop latency per applied remote command, in apply order.
    pub samples_us: Vec<f64>,
    pub stats: Option<LatencyStats>,
    /// `(value_us, fraction <= value)` at each distinct value, ascending.
    pub cdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrossTrack {
    pub errors_m: Vec<f64>,
    pub rms_m: f64,
    pub max_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstopMetrics {
    pub decision_us: SimTime,
    pub decision_cycle: u64,
    /// Sampling time of the reading that tripped the threshold.
    pub trigger_us: SimTime,
    pub stationary_us: Option<SimTime>,
    pub latency_us: Option<f64>,
    /// Two cycles plus the time to slew the fastest wheel to zero.
    pub bound_us: f64,
    pub within_bound: bool,
    /// Remote robots whose first stop command arrived after the decision cycle.
    pub late_robots: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FollowerMetrics {
    pub leader: NodeId,
    pub follower: NodeId,
    pub converged_us: Option<SimTime>,
    pub rms_m: Option<f64>,
    pub max_deviation_m: Option<f64>,
    pub min_gap_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub end_reason: Option<String>,
    pub end_time_us: SimTime,
    pub cycles: u64,
    pub cycle_length_us: u64,
    pub latency: LatencyDistribution,
    pub fb_delivery_ratio: Option<f64>,
    pub cmd_delivery_ratio: Option<f64>,
    pub completion_us: BTreeMap<NodeId, SimTime>,
    pub cross_track: BTreeMap<NodeId, CrossTrack>,
    pub estop: Option<EstopMetrics>,
    pub follower: Option<FollowerMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

pub fn stats(samples: &[f64]) -> Option<LatencyStats> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((0.99 * n as f64).ceil() as usize).clamp(1, n);
    Some(LatencyStats {
        count: n,
        min_us: sorted[0],
        mean_us: sorted.iter().sum::<f64>() / n as f64,
        p99_us: sorted[rank - 1],
        max_us: sorted[n - 1],
    })
}

/// Empirical CDF evaluated at each distinct sample value.
pub fn cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}

fn is_local(row: &TraceRow) -> bool {
    row.detail.as_deref() == Some("local")
}

/// Closed-loop latency: actuation time minus the sampling time of the
/// feedback that informed the applied command. Locally hosted loops are
/// excluded since they never cross the radio.
pub fn cycle_time_metric(trace: &Trace) -> LatencyDistribution {
    let mut informed: BTreeMap<(u64, NodeId, u16), f64> = BTreeMap::new();
    for r in trace.of(TraceEvent::Cmd).filter(|r| !is_local(r)) {
        if let (Some(peer), Some(seq), Some(t)) = (r.peer, r.seq, r.f4) {
            informed.insert((r.cycle, peer, seq), t);
        }
    }
    let samples: Vec<f64> = trace
        .of(TraceEvent::Apply)
        .filter(|r| r.msg.as_deref() == Some("CMD") && !is_local(r))
        .filter_map(|r| {
            let t = informed.get(&(r.cycle, r.node, r.seq?))?;
            Some(r.time_us as f64 - t)
        })
        .collect();
    LatencyDistribution {
        stats: stats(&samples),
        cdf: cdf(&samples),
        samples_us: samples,
    }
}

/// Fraction of feedback opportunities that reached the controller and of
/// remote commands that reached their robot.
pub fn delivery_ratios(trace: &Trace, controller: NodeId) -> (Option<f64>, Option<f64>) {
    let fb_rx = |cause: &str| {
        trace
            .of(TraceEvent::Rx)
            .filter(|r| r.node == controller && r.msg.as_deref() == Some("FB"))
            .filter(|r| r.detail.as_deref() == Some(cause))
            .count()
    };
    let sampled = trace.of(TraceEvent::FbSample).filter(|r| !is_local(r)).count();
    let fb_total = sampled + fb_rx("no-transmitter");
    let fb = (fb_total > 0).then(|| fb_rx("delivered") as f64 / fb_total as f64);

    let sent = trace.of(TraceEvent::Cmd).filter(|r| !is_local(r)).count();
    let applied = trace
        .of(TraceEvent::Apply)
        .filter(|r| r.msg.as_deref() == Some("CMD") && !is_local(r))
        .count();
    let cmd = (sent > 0).then(|| applied as f64 / sent as f64);
    (fb, cmd)
}

pub fn poses(trace: &Trace, node: NodeId) -> Vec<(SimTime, Point)> {
    trace
        .of(TraceEvent::Pose)
        .filter(|r| r.node == node)
        .filter_map(|r| Some((r.time_us, Point::new(r.f1?, r.f2?))))
        .collect()
}

fn rms(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        0.0
    } else {
        (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
    }
}

/// Distance from each ground-truth pose to the reference polyline.
pub fn cross_track_metric(positions: &[Point], reference: &[Point]) -> CrossTrack {
    let errors_m: Vec<f64> = positions
        .iter()
        .filter_map(|p| polyline_distance(reference, p))
        .collect();
    CrossTrack {
        rms_m: rms(&errors_m),
        max_m: errors_m.iter().copied().fold(0.0, f64::max),
        errors_m,
    }
}

/// Keeps points at least `spacing` apart, always retaining the first.
pub fn decimate(points: &[Point], spacing: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for p in points {
        if out.last().is_none_or(|l| l.distance(p) >= spacing) {
            out.push(*p);
        }
    }
    out
}

fn estop_metrics(trace: &Trace, cfg: &ScenarioConfig, cycle_length_us: u64) -> Option<EstopMetrics> {
    let decision = trace.of(TraceEvent::Estop).next()?;
    let decision_us = decision.time_us;
    let decision_cycle = decision.cycle;
    let trigger_us = decision.f2.map(|t| t as SimTime).unwrap_or(decision_us);

    // Wheel rows at each cycle end from the decision onwards.
    let mut by_time: BTreeMap<SimTime, Vec<&TraceRow>> = BTreeMap::new();
    for r in trace.of(TraceEvent::Wheels).filter(|r| r.time_us >= decision_us) {
        by_time.entry(r.time_us).or_default().push(r);
    }
    let stationary_us = by_time
        .iter()
        .find(|(_, rows)| {
            rows.iter()
                .all(|r| r.f3.unwrap_or(0.0) == 0.0 && r.f4.unwrap_or(0.0) == 0.0)
        })
        .map(|(&t, _)| t);

    // Fastest actual wheel speed at the last cycle end before the decision.
    let peak = trace
        .of(TraceEvent::Wheels)
        .filter(|r| r.time_us <= decision_us)
        .fold(BTreeMap::<NodeId, f64>::new(), |mut m, r| {
            let v = r.f3.unwrap_or(0.0).abs().max(r.f4.unwrap_or(0.0).abs());
            m.insert(r.node, v);
            m
        });
    let slew_us = cfg
        .robots()
        .map(|n| {
            let v = peak.get(&n.id).copied().unwrap_or(0.0);
            v / n.robot.actuation_rate_limit_mms2 * 1e6
        })
        .fold(0.0, f64::max);
    let bound_us = 2.0 * cycle_length_us as f64 + slew_us;
    let latency_us = stationary_us.map(|s| s as f64 - trigger_us as f64);

    let controller = cfg.controller_node();
    let late_robots = cfg
        .robots()
        .filter(|n| n.id != controller)
        .filter(|n| {
            let first = trace
                .of(TraceEvent::Apply)
                .filter(|r| r.node == n.id && r.time_us >= decision_us)
                .find(|r| {
                    r.msg.as_deref() == Some("ESTOP")
                        || r.f3.is_some_and(|f| (f as u8) & FLAG_ESTOP != 0)
                });
            first.is_none_or(|r| r.cycle > decision_cycle)
        })
        .map(|n| n.id)
        .collect();

    Some(EstopMetrics {
        decision_us,
        decision_cycle,
        trigger_us,
        stationary_us,
        latency_us,
        bound_us,
        within_bound: latency_us.is_some_and(|l| l <= bound_us),
        late_robots,
    })
}

fn follower_metrics(trace: &Trace, cfg: &ScenarioConfig) -> Option<FollowerMetrics> {
    let leader = cfg.nodes.iter().find(|n| n.role == Role::Leader)?.id;
    let follower = cfg.nodes.iter().find(|n| n.role == Role::Follower)?.id;
    let converged_us = trace
        .of(TraceEvent::Ref)
        .find(|r| r.peer == Some(follower))
        .map(|r| r.time_us);
    let leader_poses = poses(trace, leader);
    let follower_poses = poses(trace, follower);
    let leader_path = decimate(
        &leader_poses.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
        0.005,
    );
    let (rms_m, max_deviation_m, min_gap_m) = match converged_us {
        Some(t0) => {
            let after: Vec<Point> = follower_poses
                .iter()
                .filter(|(t, _)| *t >= t0)
                .map(|(_, p)| *p)
                .collect();
            let ct = cross_track_metric(&after, &leader_path);
            let leader_at: BTreeMap<SimTime, Point> = leader_poses.iter().copied().collect();
            let min_gap = follower_poses
                .iter()
                .filter(|(t, _)| *t >= t0)
                .filter_map(|(t, p)| leader_at.get(t).map(|l| l.distance(p)))
                .min_by(f64::total_cmp);
            (
                (!after.is_empty()).then_some(ct.rms_m),
                (!after.is_empty()).then_some(ct.max_m),
                min_gap,
            )
        }
        None => (None, None, None),
    };
    Some(FollowerMetrics {
        leader,
        follower,
        converged_us,
        rms_m,
        max_deviation_m,
        min_gap_m,
    })
}

pub fn compute_metrics(trace: &Trace, cfg: &ScenarioConfig) -> MetricsReport {
    let controller = cfg.controller_node();
    let hop = HopSequence::seeded(cfg.protocol.hop_channels, cfg.seed, controller);
    let cycle_length_us = build_schedule(&cfg.loops(), &cfg.protocol, &hop)
        .map(|s| s.cycle_length_us)
        .unwrap_or(0);
    let end = trace.of(TraceEvent::End).last();
    let (fb_delivery_ratio, cmd_delivery_ratio) = delivery_ratios(trace, controller);

    let completion_us = trace
        .of(TraceEvent::Complete)
        .filter_map(|r| Some((r.peer?, r.time_us)))
        .fold(BTreeMap::new(), |mut m, (k, t)| {
            m.entry(k).or_insert(t);
            m
        });
    let cross_track = cfg
        .robots()
        .filter(|n| n.role != Role::Follower)
        .map(|n| {
            let mut reference = vec![n.start.position()];
            reference.extend(n.path.iter().copied());
            let pts: Vec<Point> = poses(trace, n.id).into_iter().map(|(_, p)| p).collect();
            (n.id, cross_track_metric(&pts, &reference))
        })
        .collect();

    MetricsReport {
        scenario: cfg.name.clone(),
        seed: cfg.seed,
        end_reason: end.and_then(|r| r.detail.clone()),
        end_time_us: trace.rows.last().map(|r| r.time_us).unwrap_or(0),
        cycles: trace.rows.last().map(|r| r.cycle + 1).unwrap_or(0),
        cycle_length_us,
        latency: cycle_time_metric(trace),
        fb_delivery_ratio,
        cmd_delivery_ratio,
        completion_us,
        cross_track,
        estop: estop_metrics(trace, cfg, cycle_length_us),
        follower: follower_metrics(trace, cfg),
    }
}
